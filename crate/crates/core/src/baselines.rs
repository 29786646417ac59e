//! Reference policies: random selection, the abandon-one-subtask benchmark,
//! the all-local upper bound and a per-state exhaustive oracle.

use std::fmt;

use rand::Rng;

use crate::cost::CostModel;
use crate::env::{settle, Action, Env, Handling, RewardBreakdown, RewardConfig};
use crate::scenario::{Scenario, Task};
use crate::{Result, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Sac,
    Random,
    Benchmark,
    UpperBound,
    Oracle,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Sac,
        PolicyKind::Random,
        PolicyKind::Benchmark,
        PolicyKind::UpperBound,
        PolicyKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Sac => "sac",
            PolicyKind::Random => "random",
            PolicyKind::Benchmark => "benchmark",
            PolicyKind::UpperBound => "upper_bound",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn random_policy(num_devices: usize, rng: &mut SeededRng) -> Action {
    Action(rng.gen_range(0..num_devices))
}

/// Settles the designated subtasks with `handling` and everything else locally,
/// drawing noise in the same order an episode would.
fn settle_all<C: CostModel>(
    task: &Task,
    scenario: &Scenario,
    reward: &RewardConfig,
    cost: &C,
    handling: Handling,
    rng: &mut SeededRng,
) -> Result<RewardBreakdown> {
    let plan: Vec<(usize, Handling)> = task
        .offload_indices
        .iter()
        .map(|&i| (i, handling))
        .chain((0..task.len()).filter(|i| !task.is_offloaded(*i)).map(|i| (i, Handling::Local)))
        .collect();
    settle(task, scenario, reward, cost, &plan, rng)
}

/// The user device abandons the designated subtask(s) and finishes the rest.
pub fn benchmark_reward<C: CostModel>(
    task: &Task,
    scenario: &Scenario,
    reward: &RewardConfig,
    cost: &C,
    rng: &mut SeededRng,
) -> Result<RewardBreakdown> {
    settle_all(task, scenario, reward, cost, Handling::Dropped, rng)
}

/// The user device completes every subtask itself.
pub fn upper_bound_reward<C: CostModel>(
    task: &Task,
    scenario: &Scenario,
    reward: &RewardConfig,
    cost: &C,
    rng: &mut SeededRng,
) -> Result<RewardBreakdown> {
    settle_all(task, scenario, reward, cost, Handling::Local, rng)
}

/// Noise-free reward of every device for the pending decision.
pub fn device_rewards<C: CostModel>(env: &Env<C>) -> Result<Vec<RewardBreakdown>> {
    let noiseless = env.reward_config().noiseless();
    // The rng is never drawn from with noise off.
    let mut rng = crate::seeded_rng(0, 0);
    (0..env.num_devices())
        .map(|d| env.preview_with(Action(d), &noiseless, &mut rng))
        .collect()
}

/// Exhaustive argmax over devices for the pending decision (ties to the lowest index).
pub fn oracle_select<C: CostModel>(env: &Env<C>) -> Result<(Action, RewardBreakdown)> {
    let rewards = device_rewards(env)?;
    let mut best = 0;
    for (i, r) in rewards.iter().enumerate() {
        if r.reward > rewards[best].reward {
            best = i;
        }
    }
    Ok((Action(best), rewards[best]))
}
