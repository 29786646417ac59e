use std::path::{Path, PathBuf};

use crate::baselines::{benchmark_reward, random_policy, upper_bound_reward};
use crate::cost::ShannonCost;
use crate::env::{Env, RewardBreakdown, Transition};
use crate::harness::config::RunConfig;
use crate::harness::metrics::{write_metrics, MetricsRecord};
use crate::sac::{LossReport, ReplayBuffer, SacAgent, SelectMode};
use crate::scenario::build_scenario;
use crate::{seeded_rng, Error, Result, SeededRng};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.moesac";

// Independent rng streams derived from the run seed.
pub(crate) const AGENT_INIT_STREAM: u64 = 1;
pub(crate) const ENV_STREAM: u64 = 2;
pub(crate) const ACTION_STREAM: u64 = 3;
pub(crate) const REPLAY_STREAM: u64 = 4;
pub(crate) const REFERENCE_STREAM: u64 = 5;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: SacAgent,
    pub records: Vec<MetricsRecord>,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

pub fn build_env(config: &RunConfig) -> Result<Env<ShannonCost>> {
    let scenario = build_scenario(&config.scenario, config.seed)?;
    Ok(Env::new(scenario, config.reward, config.cost))
}

/// Plays one episode on a copy of `env` with `choose` picking devices.
pub(crate) fn play_episode(
    env: &Env<ShannonCost>,
    noise: &mut SeededRng,
    mut choose: impl FnMut(&Env<ShannonCost>, &crate::env::StateVector) -> Result<crate::env::Action>,
    state: &crate::env::StateVector,
) -> Result<RewardBreakdown> {
    let mut env = env.clone();
    let mut state = state.clone();
    let mut total = RewardBreakdown::default();
    loop {
        let action = choose(&env, &state)?;
        let out = env.step(action, noise)?;
        total.accumulate(&out.breakdown);
        if out.done {
            return Ok(total);
        }
        state = out.next_state;
    }
}

/// Runs the full training loop in memory. Deterministic in `config`.
pub fn train_in_memory(config: &RunConfig) -> Result<(SacAgent, Vec<MetricsRecord>)> {
    config.validate()?;
    let mut env = build_env(config)?;
    let seed = config.seed;
    let mut agent = SacAgent::new(
        env.state_dim(),
        env.num_devices(),
        config.sac.clone(),
        &mut seeded_rng(seed, AGENT_INIT_STREAM),
    )?;
    let mut env_rng = seeded_rng(seed, ENV_STREAM);
    let mut action_rng = seeded_rng(seed, ACTION_STREAM);
    let mut replay_rng = seeded_rng(seed, REPLAY_STREAM);
    let mut reference_rng = seeded_rng(seed, REFERENCE_STREAM);
    let mut buffer = ReplayBuffer::new(config.sac.buffer_capacity);
    let mut records = Vec::with_capacity(config.train.epochs);

    for epoch in 0..config.train.epochs {
        let (mut reward, mut quality, mut comm, mut compute) = (Mean::default(), Mean::default(), Mean::default(), Mean::default());
        let (mut upper, mut bench, mut random) = (Mean::default(), Mean::default(), Mean::default());
        let mut losses: [Mean; 4] = Default::default();
        let mut last_alpha = agent.alpha();

        for _ in 0..config.train.episodes_per_epoch {
            let mut state = env.reset(&mut env_rng);
            let task = env.task().expect("reset").clone();

            // Reference policies face the same task, channels and noise.
            let scenario = env.scenario();
            upper.add(upper_bound_reward(&task, scenario, &config.reward, &config.cost, &mut env_rng.clone())?.reward);
            bench.add(benchmark_reward(&task, scenario, &config.reward, &config.cost, &mut env_rng.clone())?.reward);
            let n = env.num_devices();
            random.add(
                play_episode(&env, &mut env_rng.clone(), |_, _| Ok(random_policy(n, &mut reference_rng)), &state)?.reward,
            );

            let mut total = RewardBreakdown::default();
            loop {
                let action = agent.select_action(&state, SelectMode::Sample, &mut action_rng)?;
                let out = env.step(action, &mut env_rng)?;
                total.accumulate(&out.breakdown);
                buffer.push(Transition {
                    state,
                    action,
                    reward: out.breakdown.reward,
                    next_state: out.next_state.clone(),
                    done: out.done,
                });
                if buffer.len() >= config.sac.batch_size {
                    for _ in 0..config.train.updates_per_step {
                        let LossReport {
                            critic1_loss,
                            critic2_loss,
                            actor_loss,
                            alpha_loss,
                            alpha,
                        } = agent.update(&buffer, &mut replay_rng)?;
                        for (m, v) in losses.iter_mut().zip([critic1_loss, critic2_loss, actor_loss, alpha_loss]) {
                            m.add(v);
                        }
                        last_alpha = alpha;
                    }
                }
                state = out.next_state;
                if out.done {
                    break;
                }
            }
            reward.add(total.reward);
            quality.add(total.quality_total);
            comm.add(total.comm_energy_j);
            compute.add(total.compute_cost);
        }

        let record = MetricsRecord {
            epoch,
            mean_reward: reward.get(),
            mean_quality: quality.get(),
            mean_comm_energy_j: comm.get(),
            mean_compute_cost: compute.get(),
            critic1_loss: losses[0].get(),
            critic2_loss: losses[1].get(),
            actor_loss: losses[2].get(),
            alpha_loss: losses[3].get(),
            alpha: last_alpha,
            ref_upper: upper.get(),
            ref_benchmark: bench.get(),
            ref_random: random.get(),
        };
        if !record.is_finite() || !agent.is_finite() {
            return Err(Error::NonFinite(format!("training at epoch {epoch}")));
        }
        records.push(record);
    }
    Ok((agent, records))
}

/// Trains and writes `metrics.csv` and `checkpoint.moesac` under `out_dir`.
pub fn train(config: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    let (agent, records) = train_in_memory(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let metrics_path = out_dir.join(METRICS_FILE);
    let checkpoint_path = out_dir.join(CHECKPOINT_FILE);
    write_metrics(&metrics_path, &records)?;
    agent.save(&checkpoint_path)?;
    Ok(TrainOutcome {
        agent,
        records,
        metrics_path,
        checkpoint_path,
    })
}
