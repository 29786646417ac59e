//! Run configuration, read from TOML.
//!
//! Every key is optional and unknown keys are rejected. An empty file gives
//! the defaults below.
//!
//! | key | default | unit |
//! |-----|---------|------|
//! | `seed` | 0 | |
//! | `out_dir` | `runs/default` | path |
//! | `scenario.num_devices` | 30 | devices |
//! | `scenario.num_topics` | 6 | topics |
//! | `scenario.snr_min`, `scenario.snr_max` | 5, 20 | linear ratio (dB if `snr_in_db`) |
//! | `scenario.snr_in_db` | false | |
//! | `scenario.bandwidth_hz` | 1000 | Hz |
//! | `scenario.tx_power_w` | 0.1 | W |
//! | `scenario.avail_compute_min`, `avail_compute_max` | 0.5, 3.0 | compute units |
//! | `scenario.q_match`, `scenario.q_off` | 8, 4 | quality points |
//! | `scenario.local_q_bonus` | 1 | quality points |
//! | `scenario.local_compute_budget` | 3 | compute units |
//! | `scenario.subtasks_per_task` | 4 | |
//! | `scenario.offloads_per_task` | 1 | |
//! | `scenario.prompt_bits_min`, `prompt_bits_max` | 2000, 8000 | bits |
//! | `scenario.output_bits_min`, `output_bits_max` | 20000, 60000 | bits |
//! | `scenario.compute_per_bit` | 2.5e-5 | compute units per bit |
//! | `cost.kappa_c` | 2.5e-5 | cost per generated bit |
//! | `cost.edge_multiplier`, `cost.local_multiplier` | 1, 1 | |
//! | `reward.lambda_energy` | 1 | per J |
//! | `reward.lambda_compute` | 1 | per cost unit |
//! | `reward.quality_scale` | 5 | |
//! | `reward.quality_noise_std` | 0.5 | quality points |
//! | `reward.gating` | `uniform` | `uniform` or `size_proportional` |
//! | `sac.hidden` | [128, 128] | |
//! | `sac.gamma`, `sac.tau` | 0.99, 0.005 | |
//! | `sac.actor_lr`, `critic_lr`, `alpha_lr` | 3e-4 each | |
//! | `sac.batch_size` | 128 | transitions |
//! | `sac.buffer_capacity` | 50000 | transitions |
//! | `sac.target_entropy_ratio` | 0.6 | fraction of ln N |
//! | `sac.initial_alpha` | 1 | |
//! | `sac.optimizer` | `adam` | `adam` or `sgd` |
//! | `train.epochs` | 200 | |
//! | `train.episodes_per_epoch` | 50 | |
//! | `train.updates_per_step` | 1 | |
//! | `eval.episodes` | 1000 | |
//! | `eval.final_window` | 100 | episodes |
//! | `eval.quality_noise_std` | 0 | quality points |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::ShannonCost;
use crate::env::RewardConfig;
use crate::sac::SacConfig;
use crate::scenario::ScenarioConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub episodes_per_epoch: usize,
    pub updates_per_step: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            episodes_per_epoch: 50,
            updates_per_step: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Trailing episodes averaged into the "final" reward.
    pub final_window: usize,
    /// Quality noise during evaluation.
    pub quality_noise_std: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            final_window: 100,
            quality_noise_std: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub cost: ShannonCost,
    pub reward: RewardConfig,
    pub sac: SacConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            scenario: ScenarioConfig::default(),
            cost: ShannonCost::default(),
            reward: RewardConfig::default(),
            sac: SacConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.cost.validate()?;
        self.reward.validate()?;
        self.sac.validate()?;
        if self.train.epochs == 0 {
            return Err(Error::config("train.epochs", "must be positive"));
        }
        if self.train.episodes_per_epoch == 0 {
            return Err(Error::config("train.episodes_per_epoch", "must be positive"));
        }
        if self.eval.episodes == 0 {
            return Err(Error::config("eval.episodes", "must be positive"));
        }
        if self.eval.final_window == 0 || self.eval.final_window > self.eval.episodes {
            return Err(Error::config("eval.final_window", "must be in [1, eval.episodes]"));
        }
        if !(self.eval.quality_noise_std >= 0.0 && self.eval.quality_noise_std.is_finite()) {
            return Err(Error::config("eval.quality_noise_std", "must be nonnegative and finite"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml_str(&text, path)
}
