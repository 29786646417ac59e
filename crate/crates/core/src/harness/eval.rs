//! Paired evaluation of the trained agent against the reference policies.
//!
//! Each episode samples one task and channel draw; all five policies then play
//! it with the same quality-noise stream.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{benchmark_reward, oracle_select, random_policy, upper_bound_reward, PolicyKind};
use crate::env::{Env, RewardBreakdown, RewardConfig};
use crate::harness::config::RunConfig;
use crate::harness::metrics::csv_error;
use crate::harness::train::play_episode;
use crate::sac::{SacAgent, SelectMode};
use crate::scenario::build_scenario;
use crate::{seeded_rng, Error, Result};

pub const EVAL_FILE: &str = "eval.csv";

const EVAL_ENV_STREAM: u64 = 6;
const EVAL_RANDOM_STREAM: u64 = 7;
const EVAL_NOISE_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub policy: String,
    pub mean_reward: f64,
    pub final_reward: f64,
    pub mean_quality: f64,
    pub mean_comm_energy_j: f64,
    pub mean_compute_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub stats: Vec<PolicyStats>,
    /// Per-episode total rewards, indexed like [`PolicyKind::ALL`].
    pub episode_rewards: Vec<Vec<f64>>,
}

impl EvalReport {
    pub fn get(&self, policy: PolicyKind) -> &PolicyStats {
        let idx = PolicyKind::ALL.iter().position(|p| *p == policy).expect("known policy");
        &self.stats[idx]
    }

    pub fn mean(&self, policy: PolicyKind) -> f64 {
        self.get(policy).mean_reward
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for s in &self.stats {
            writer.serialize(s).map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn read_eval(path: &Path) -> Result<Vec<PolicyStats>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", i + 2),
            })
        })
        .collect()
}

/// Evaluates `agent` greedily against the reference policies.
pub fn evaluate(agent: &SacAgent, config: &RunConfig) -> Result<EvalReport> {
    config.validate()?;
    let scenario = build_scenario(&config.scenario, config.seed)?;
    let reward = RewardConfig {
        quality_noise_std: config.eval.quality_noise_std,
        ..config.reward
    };
    let mut env = Env::new(scenario, reward, config.cost);
    if agent.state_dim() != env.state_dim() || agent.num_actions() != env.num_devices() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint is {}-dim/{} actions, config needs {}-dim/{} actions",
            agent.state_dim(),
            agent.num_actions(),
            env.state_dim(),
            env.num_devices()
        )));
    }
    let mut env_rng = seeded_rng(config.seed, EVAL_ENV_STREAM);
    let mut random_rng = seeded_rng(config.seed, EVAL_RANDOM_STREAM);
    let mut totals: Vec<Vec<RewardBreakdown>> = vec![Vec::with_capacity(config.eval.episodes); PolicyKind::ALL.len()];
    let n = env.num_devices();
    // Greedy selection never touches its rng.
    let mut unused = seeded_rng(0, 0);

    for episode in 0..config.eval.episodes {
        let state = env.reset(&mut env_rng);
        let task = env.task().expect("reset").clone();
        let noise = seeded_rng(config.seed, EVAL_NOISE_STREAM_BASE + episode as u64);
        for (slot, policy) in PolicyKind::ALL.iter().enumerate() {
            let mut noise = noise.clone();
            let total = match policy {
                PolicyKind::Sac => play_episode(&env, &mut noise, |_, s| agent.select_action(s, SelectMode::Greedy, &mut unused), &state)?,
                PolicyKind::Random => play_episode(&env, &mut noise, |_, _| Ok(random_policy(n, &mut random_rng)), &state)?,
                PolicyKind::Oracle => play_episode(&env, &mut noise, |e, _| Ok(oracle_select(e)?.0), &state)?,
                PolicyKind::Benchmark => benchmark_reward(&task, env.scenario(), &reward, &config.cost, &mut noise)?,
                PolicyKind::UpperBound => upper_bound_reward(&task, env.scenario(), &reward, &config.cost, &mut noise)?,
            };
            totals[slot].push(total);
        }
    }

    let window = config.eval.final_window;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let stats = PolicyKind::ALL
        .iter()
        .zip(&totals)
        .map(|(policy, rows)| {
            let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
            PolicyStats {
                policy: policy.name().to_string(),
                mean_reward: mean(&rewards),
                final_reward: mean(&rewards[rewards.len() - window..]),
                mean_quality: mean(&rows.iter().map(|r| r.quality_total).collect::<Vec<_>>()),
                mean_comm_energy_j: mean(&rows.iter().map(|r| r.comm_energy_j).collect::<Vec<_>>()),
                mean_compute_cost: mean(&rows.iter().map(|r| r.compute_cost).collect::<Vec<_>>()),
            }
        })
        .collect::<Vec<_>>();
    if stats.iter().any(|s| !(s.mean_reward.is_finite() && s.final_reward.is_finite())) {
        return Err(Error::NonFinite("evaluation".into()));
    }
    Ok(EvalReport {
        episodes: config.eval.episodes,
        stats,
        episode_rewards: totals.iter().map(|rows| rows.iter().map(|r| r.reward).collect()).collect(),
    })
}

/// Loads a checkpoint and evaluates it, writing `eval.csv` under `out_dir`.
pub fn evaluate_checkpoint(checkpoint: &Path, config: &RunConfig, out_dir: &Path) -> Result<EvalReport> {
    let agent = SacAgent::load(checkpoint)?;
    let report = evaluate(&agent, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    report.write(&out_dir.join(EVAL_FILE))?;
    Ok(report)
}
