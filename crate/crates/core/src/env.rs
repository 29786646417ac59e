//! The offloading MDP.
//!
//! An episode is one task. Each decision offloads the next designated subtask
//! to the chosen edge device; the final decision also settles every subtask
//! kept on the user device. Reward is quality minus weighted energy and
//! compute cost, so summing step rewards over an episode gives the task's
//! total.
//!
//! Every settled subtask consumes exactly one noise sample (when noise is on),
//! including abandoned ones. Policies replaying the same rng therefore see the
//! same noise on the same subtask.

use serde::{Deserialize, Serialize};

use crate::cost::{CommCost, CostModel, ShannonCost};
use crate::quality::{self, aggregate_quality, gating_weights, GatingMode, GatingWeights, QualityScore};
use crate::scenario::{ChannelState, ExpertProfile, Scenario, Subtask, Task};
use crate::{Error, Result, SeededRng};

/// Features per device block.
pub const DEVICE_FEATURES: usize = 5;
/// Features in the user block.
pub const USER_FEATURES: usize = 3;

pub fn state_dim(num_devices: usize) -> usize {
    USER_FEATURES + DEVICE_FEATURES * num_devices
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: Action,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight on communication energy (per joule).
    pub lambda_energy: f64,
    /// Weight on compute cost.
    pub lambda_compute: f64,
    /// Multiplier turning weighted mean quality into reward units.
    pub quality_scale: f64,
    /// Standard deviation of per-subtask quality noise.
    pub quality_noise_std: f64,
    pub gating: GatingMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda_energy: 1.0,
            lambda_compute: 1.0,
            quality_scale: 5.0,
            quality_noise_std: 0.5,
            gating: GatingMode::Uniform,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("reward.lambda_energy", self.lambda_energy),
            ("reward.lambda_compute", self.lambda_compute),
            ("reward.quality_noise_std", self.quality_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be nonnegative and finite"));
            }
        }
        if !(self.quality_scale > 0.0 && self.quality_scale.is_finite()) {
            return Err(Error::config("reward.quality_scale", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn noiseless(self) -> Self {
        Self {
            quality_noise_std: 0.0,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub quality_total: f64,
    pub comm_energy_j: f64,
    pub compute_cost: f64,
    pub reward: f64,
}

impl RewardBreakdown {
    pub fn new(quality_total: f64, comm_energy_j: f64, compute_cost: f64, cfg: &RewardConfig) -> Self {
        Self {
            quality_total,
            comm_energy_j,
            compute_cost,
            reward: quality_total - cfg.lambda_energy * comm_energy_j - cfg.lambda_compute * compute_cost,
        }
    }

    /// Component-wise sum; the reward identity survives up to float rounding.
    pub fn accumulate(&mut self, other: &RewardBreakdown) {
        self.quality_total += other.quality_total;
        self.comm_energy_j += other.comm_energy_j;
        self.compute_cost += other.compute_cost;
        self.reward += other.reward;
    }
}

/// How one subtask is settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handling {
    Local,
    Edge(usize),
    Dropped,
}

/// Settles a batch of subtasks into one breakdown.
///
/// Subtasks not listed contribute nothing; weights are never renormalized.
pub(crate) fn settle<C: CostModel>(
    task: &Task,
    scenario: &Scenario,
    reward: &RewardConfig,
    cost: &C,
    plan: &[(usize, Handling)],
    rng: &mut SeededRng,
) -> Result<RewardBreakdown> {
    let weights: GatingWeights = gating_weights(task, reward.gating);
    let mut scores = vec![QualityScore::ZERO; task.len()];
    let mut comm = CommCost::default();
    let mut compute = 0.0;
    let sigma = reward.quality_noise_std;
    let local_expert = |st: &Subtask| ExpertProfile {
        specialty: st.topic,
        q_match: scenario.user.local_q_base,
        q_off: scenario.user.local_q_base,
    };
    for &(idx, handling) in plan {
        let st = &task.subtasks[idx];
        match handling {
            Handling::Local => {
                scores[idx] = quality::subtask_quality(
                    &local_expert(st),
                    st,
                    quality::Placement::Local,
                    scenario.user.local_q_bonus,
                    rng,
                    sigma,
                );
                compute += cost.local_compute(st);
            }
            Handling::Edge(device) => {
                let device = &scenario.devices[device];
                if device.can_run(st) {
                    scores[idx] = quality::subtask_quality(
                        &device.expert,
                        st,
                        quality::Placement::Edge,
                        scenario.user.local_q_bonus,
                        rng,
                        sigma,
                    );
                    comm = comm + cost.round_trip(&device.channel, st)?;
                    compute += cost.edge_compute(st);
                } else {
                    // Failed generation: the prompt was still sent.
                    quality::noise(rng, sigma);
                    comm = comm + cost.transfer(&device.channel, st.prompt_bits)?;
                }
            }
            Handling::Dropped => {
                quality::noise(rng, sigma);
            }
        }
    }
    let quality_total = aggregate_quality(&scores, &weights, reward.quality_scale)?;
    Ok(RewardBreakdown::new(quality_total, comm.energy_j, compute, reward))
}

/// The settlement plan for decision `decision` when the device is `device`.
pub(crate) fn decision_plan(task: &Task, decision: usize, handling: Handling) -> Vec<(usize, Handling)> {
    let mut plan = vec![(task.offload_indices[decision], handling)];
    if decision + 1 == task.offload_indices.len() {
        plan.extend(
            (0..task.len())
                .filter(|i| !task.is_offloaded(*i))
                .map(|i| (i, Handling::Local)),
        );
    }
    plan
}

/// Normalized features for offload decision `decision` of `task`.
pub fn encode_state<C: CostModel>(task: &Task, decision: usize, scenario: &Scenario, cost: &C) -> StateVector {
    let cfg = &scenario.config;
    let subtask = &task.subtasks[task.offload_indices[decision]];
    let topic_norm = |t: usize| {
        if scenario.num_topics() > 1 {
            t as f64 / (scenario.num_topics() - 1) as f64
        } else {
            0.0
        }
    };
    let ratio = |x: f64, max: f64| {
        if max > 0.0 && max.is_finite() {
            (x / max).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    let snr = cfg.snr_range();
    let weakest = ChannelState {
        snr_linear: snr.min_linear(),
        bandwidth_hz: cfg.bandwidth_hz,
        tx_power_w: cfg.tx_power_w,
    };
    let energy = |channel: &ChannelState, bits: u64| cost.transfer(channel, bits).map(|c| c.energy_j).unwrap_or(f64::INFINITY);
    let max_prompt_energy = energy(&weakest, cfg.prompt_bits_max);
    let max_round_trip = energy(&weakest, cfg.prompt_bits_max) + energy(&weakest, cfg.output_bits_max);
    let max_compute = cfg.compute_per_bit * cfg.output_bits_max as f64;

    let mut values = Vec::with_capacity(state_dim(scenario.num_devices()));
    values.push(ratio(subtask.compute_units, max_compute));
    values.push(topic_norm(subtask.topic.0));
    values.push(ratio(energy(&weakest, subtask.prompt_bits), max_prompt_energy));
    for device in &scenario.devices {
        let round_trip = energy(&device.channel, subtask.prompt_bits) + energy(&device.channel, subtask.output_bits);
        values.push(ratio(device.avail_compute_units, cfg.avail_compute_max));
        values.push(topic_norm(device.expert.specialty.0));
        values.push(if device.expert.specialty == subtask.topic { 1.0 } else { 0.0 });
        values.push(snr.normalize(device.channel.snr_linear));
        values.push(if round_trip.is_finite() { ratio(round_trip, max_round_trip) } else { 1.0 });
    }
    StateVector(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub breakdown: RewardBreakdown,
    pub next_state: StateVector,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Env<C: CostModel = ShannonCost> {
    scenario: Scenario,
    reward: RewardConfig,
    cost: C,
    task: Option<Task>,
    decision: usize,
}

impl<C: CostModel> Env<C> {
    pub fn new(scenario: Scenario, reward: RewardConfig, cost: C) -> Self {
        Self {
            scenario,
            reward,
            cost,
            task: None,
            decision: 0,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn cost_model(&self) -> &C {
        &self.cost
    }

    pub fn task(&self) -> Option<&Task> {
        self.task.as_ref()
    }

    pub fn num_devices(&self) -> usize {
        self.scenario.num_devices()
    }

    pub fn state_dim(&self) -> usize {
        state_dim(self.num_devices())
    }

    pub fn is_done(&self) -> bool {
        match &self.task {
            Some(task) => self.decision >= task.offload_indices.len(),
            None => true,
        }
    }

    /// Samples a task, redraws channels and returns the first observation.
    pub fn reset(&mut self, rng: &mut SeededRng) -> StateVector {
        let task = self.scenario.sample_task(rng);
        self.scenario.resample_channels(rng);
        self.start(task)
    }

    /// Starts an episode on a given task with the current channels.
    pub fn start(&mut self, task: Task) -> StateVector {
        self.task = Some(task);
        self.decision = 0;
        self.observe()
    }

    fn observe(&self) -> StateVector {
        let task = self.task.as_ref().expect("episode started");
        let decision = self.decision.min(task.offload_indices.len() - 1);
        encode_state(task, decision, &self.scenario, &self.cost)
    }

    fn check(&self, action: Action) -> Result<&Task> {
        if self.is_done() {
            return Err(Error::EpisodeOver);
        }
        if action.0 >= self.num_devices() {
            return Err(Error::InvalidAction {
                action: action.0,
                num_devices: self.num_devices(),
            });
        }
        Ok(self.task.as_ref().expect("not done"))
    }

    /// Reward of `action` for the pending decision, without advancing.
    pub fn preview(&self, action: Action, rng: &mut SeededRng) -> Result<RewardBreakdown> {
        self.preview_with(action, &self.reward, rng)
    }

    pub(crate) fn preview_with(&self, action: Action, reward: &RewardConfig, rng: &mut SeededRng) -> Result<RewardBreakdown> {
        let task = self.check(action)?;
        let plan = decision_plan(task, self.decision, Handling::Edge(action.0));
        settle(task, &self.scenario, reward, &self.cost, &plan, rng)
    }

    pub fn step(&mut self, action: Action, rng: &mut SeededRng) -> Result<StepOutcome> {
        let breakdown = self.preview(action, rng)?;
        self.decision += 1;
        Ok(StepOutcome {
            breakdown,
            next_state: self.observe(),
            done: self.is_done(),
        })
    }
}

/// Sum of rewards over one episode.
pub fn episode_reward(transitions: &[Transition]) -> Result<f64> {
    if transitions.is_empty() {
        return Err(Error::EmptyEpisode);
    }
    Ok(transitions.iter().map(|t| t.reward).sum())
}
