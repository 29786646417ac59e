//! World generation: topics, experts, edge devices, channels and tasks.
//!
//! Everything here is a plain value. A [`Scenario`] is built once from a
//! [`ScenarioConfig`] and a seed; channels are redrawn between episodes with
//! [`Scenario::resample_channels`], which leaves every other field untouched.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result, SeededRng};

/// Labels for the first six topics. Larger catalogs get generated names.
pub const TOPIC_LABELS: [&str; 6] = [
    "character appearance",
    "landscapes",
    "weather",
    "architecture",
    "food",
    "sports",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopicId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicCatalog {
    labels: Vec<String>,
}

impl TopicCatalog {
    pub fn new(size: usize) -> Self {
        let labels = (0..size)
            .map(|i| match TOPIC_LABELS.get(i) {
                Some(label) => (*label).to_string(),
                None => format!("topic {i}"),
            })
            .collect();
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, topic: TopicId) -> bool {
        topic.0 < self.labels.len()
    }

    pub fn label(&self, topic: TopicId) -> Option<&str> {
        self.labels.get(topic.0).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subtask {
    pub id: usize,
    pub topic: TopicId,
    pub prompt_bits: u64,
    pub output_bits: u64,
    pub compute_units: f64,
}

/// A decomposed generation request.
///
/// `offload_indices` lists the subtasks designated for offloading, in the
/// order the agent decides them. With the default single offload it has
/// exactly one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub subtasks: Vec<Subtask>,
    pub offload_indices: Vec<usize>,
}

impl Task {
    /// The first (and by default only) subtask designated for offloading.
    pub fn offload_index(&self) -> usize {
        self.offload_indices[0]
    }

    pub fn is_offloaded(&self, index: usize) -> bool {
        self.offload_indices.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.subtasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subtasks.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertProfile {
    pub specialty: TopicId,
    pub q_match: f64,
    pub q_off: f64,
}

impl ExpertProfile {
    pub fn base_quality(&self, topic: TopicId) -> f64 {
        if topic == self.specialty {
            self.q_match
        } else {
            self.q_off
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub snr_linear: f64,
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDevice {
    pub id: usize,
    pub expert: ExpertProfile,
    pub avail_compute_units: f64,
    pub channel: ChannelState,
}

impl EdgeDevice {
    pub fn can_run(&self, subtask: &Subtask) -> bool {
        self.avail_compute_units >= subtask.compute_units
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDevice {
    /// Quality advantage of the jointly trained local experts.
    pub local_q_bonus: f64,
    pub local_compute_budget: f64,
    /// Quality the local experts reach on any topic, before the bonus.
    pub local_q_base: f64,
}

/// Range the per-device SNR is drawn from.
///
/// When `in_db` is set, `min` and `max` are decibels and the draw is uniform
/// in dB; channels always store the linear ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrRange {
    pub min: f64,
    pub max: f64,
    pub in_db: bool,
}

impl SnrRange {
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        let raw = if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        };
        self.to_linear(raw)
    }

    fn to_linear(self, raw: f64) -> f64 {
        if self.in_db {
            10f64.powf(raw / 10.0)
        } else {
            raw
        }
    }

    pub fn min_linear(&self) -> f64 {
        self.to_linear(self.min)
    }

    pub fn max_linear(&self) -> f64 {
        self.to_linear(self.max)
    }

    /// Min-max normalization in the units the range is declared in.
    pub fn normalize(&self, snr_linear: f64) -> f64 {
        if self.max <= self.min {
            return 0.0;
        }
        let raw = if self.in_db {
            10.0 * snr_linear.log10()
        } else {
            snr_linear
        };
        ((raw - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of edge devices N.
    pub num_devices: usize,
    /// Topic catalog size T.
    pub num_topics: usize,
    pub snr_min: f64,
    pub snr_max: f64,
    /// Interpret `snr_min`/`snr_max` as dB instead of a linear ratio.
    pub snr_in_db: bool,
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    /// Edge compute availability is drawn uniformly from this range.
    pub avail_compute_min: f64,
    pub avail_compute_max: f64,
    pub q_match: f64,
    pub q_off: f64,
    pub local_q_bonus: f64,
    pub local_compute_budget: f64,
    /// Subtasks per task (K_total).
    pub subtasks_per_task: usize,
    /// Offload decisions per task (K_offload).
    pub offloads_per_task: usize,
    pub prompt_bits_min: u64,
    pub prompt_bits_max: u64,
    pub output_bits_min: u64,
    pub output_bits_max: u64,
    /// Compute demand per generated bit.
    pub compute_per_bit: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_devices: 30,
            num_topics: 6,
            snr_min: 5.0,
            snr_max: 20.0,
            snr_in_db: false,
            bandwidth_hz: 1000.0,
            tx_power_w: 0.1,
            avail_compute_min: 0.5,
            avail_compute_max: 3.0,
            q_match: 8.0,
            q_off: 4.0,
            local_q_bonus: 1.0,
            local_compute_budget: 3.0,
            subtasks_per_task: 4,
            offloads_per_task: 1,
            prompt_bits_min: 2000,
            prompt_bits_max: 8000,
            output_bits_min: 20000,
            output_bits_max: 60000,
            compute_per_bit: 2.5e-5,
        }
    }
}

fn finite(key: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, "must be finite"))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_devices == 0 {
            return Err(Error::config("scenario.num_devices", "need at least one edge device"));
        }
        if self.num_topics == 0 {
            return Err(Error::config("scenario.num_topics", "need at least one topic"));
        }
        for (key, v) in [
            ("scenario.snr_min", self.snr_min),
            ("scenario.snr_max", self.snr_max),
            ("scenario.bandwidth_hz", self.bandwidth_hz),
            ("scenario.tx_power_w", self.tx_power_w),
            ("scenario.avail_compute_min", self.avail_compute_min),
            ("scenario.avail_compute_max", self.avail_compute_max),
            ("scenario.q_match", self.q_match),
            ("scenario.q_off", self.q_off),
            ("scenario.local_q_bonus", self.local_q_bonus),
            ("scenario.local_compute_budget", self.local_compute_budget),
            ("scenario.compute_per_bit", self.compute_per_bit),
        ] {
            finite(key, v)?;
        }
        if self.snr_min > self.snr_max {
            return Err(Error::config(
                "scenario.snr_min/snr_max",
                format!("snr range is inverted ({} > {})", self.snr_min, self.snr_max),
            ));
        }
        if !self.snr_in_db && self.snr_min <= 0.0 {
            return Err(Error::config(
                "scenario.snr_min",
                "linear snr must be positive so every channel has a nonzero rate",
            ));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::config("scenario.bandwidth_hz", "must be positive"));
        }
        if self.tx_power_w <= 0.0 {
            return Err(Error::config("scenario.tx_power_w", "must be positive"));
        }
        if self.avail_compute_min < 0.0 || self.avail_compute_min > self.avail_compute_max {
            return Err(Error::config(
                "scenario.avail_compute_min/avail_compute_max",
                "need 0 <= min <= max",
            ));
        }
        if !(0.0 <= self.q_off && self.q_off < self.q_match && self.q_match <= 10.0) {
            return Err(Error::config(
                "scenario.q_match/q_off",
                "need 0 <= q_off < q_match <= 10",
            ));
        }
        if self.local_q_bonus < 0.0 {
            return Err(Error::config("scenario.local_q_bonus", "must be nonnegative"));
        }
        if self.local_compute_budget < 0.0 {
            return Err(Error::config("scenario.local_compute_budget", "must be nonnegative"));
        }
        if self.subtasks_per_task == 0 {
            return Err(Error::config("scenario.subtasks_per_task", "must be at least 1"));
        }
        if self.offloads_per_task == 0 || self.offloads_per_task > self.subtasks_per_task {
            return Err(Error::config(
                "scenario.offloads_per_task",
                "must be in [1, subtasks_per_task]",
            ));
        }
        if self.prompt_bits_min == 0 || self.prompt_bits_min > self.prompt_bits_max {
            return Err(Error::config(
                "scenario.prompt_bits_min/prompt_bits_max",
                "need 1 <= min <= max",
            ));
        }
        if self.output_bits_min == 0 || self.output_bits_min > self.output_bits_max {
            return Err(Error::config(
                "scenario.output_bits_min/output_bits_max",
                "need 1 <= min <= max",
            ));
        }
        if self.compute_per_bit <= 0.0 {
            return Err(Error::config("scenario.compute_per_bit", "must be positive"));
        }
        Ok(())
    }

    pub fn snr_range(&self) -> SnrRange {
        SnrRange {
            min: self.snr_min,
            max: self.snr_max,
            in_db: self.snr_in_db,
        }
    }
}

/// Immutable world description for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub user: UserDevice,
    pub devices: Vec<EdgeDevice>,
    pub topics: TopicCatalog,
    pub seed: u64,
    pub config: ScenarioConfig,
}

const SCENARIO_STREAM: u64 = 0x5CE7;

/// Builds the world for `seed`. Equal `(config, seed)` pairs give equal scenarios.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = seeded_rng(seed, SCENARIO_STREAM);
    let snr = config.snr_range();
    let devices = (0..config.num_devices)
        .map(|id| {
            let specialty = TopicId(rng.gen_range(0..config.num_topics));
            let avail_compute_units = if config.avail_compute_min == config.avail_compute_max {
                config.avail_compute_min
            } else {
                rng.gen_range(config.avail_compute_min..=config.avail_compute_max)
            };
            let snr_linear = snr.sample(&mut rng);
            EdgeDevice {
                id,
                expert: ExpertProfile {
                    specialty,
                    q_match: config.q_match,
                    q_off: config.q_off,
                },
                avail_compute_units,
                channel: ChannelState {
                    snr_linear,
                    bandwidth_hz: config.bandwidth_hz,
                    tx_power_w: config.tx_power_w,
                },
            }
        })
        .collect();
    Ok(Scenario {
        user: UserDevice {
            local_q_bonus: config.local_q_bonus,
            local_compute_budget: config.local_compute_budget,
            local_q_base: config.q_match,
        },
        devices,
        topics: TopicCatalog::new(config.num_topics),
        seed,
        config: config.clone(),
    })
}

impl Scenario {
    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    /// Draws one decomposed task.
    pub fn sample_task(&self, rng: &mut SeededRng) -> Task {
        let cfg = &self.config;
        let subtasks = (0..cfg.subtasks_per_task)
            .map(|id| {
                let topic = TopicId(rng.gen_range(0..cfg.num_topics));
                let prompt_bits = rng.gen_range(cfg.prompt_bits_min..=cfg.prompt_bits_max);
                let output_bits = rng.gen_range(cfg.output_bits_min..=cfg.output_bits_max);
                Subtask {
                    id,
                    topic,
                    prompt_bits,
                    output_bits,
                    compute_units: cfg.compute_per_bit * output_bits as f64,
                }
            })
            .collect();
        let offload_indices = if cfg.offloads_per_task == 1 {
            vec![rng.gen_range(0..cfg.subtasks_per_task)]
        } else {
            index::sample(rng, cfg.subtasks_per_task, cfg.offloads_per_task).into_vec()
        };
        Task {
            subtasks,
            offload_indices,
        }
    }

    /// Redraws every device's SNR; nothing else changes.
    pub fn resample_channels(&mut self, rng: &mut SeededRng) {
        let snr = self.config.snr_range();
        for device in &mut self.devices {
            device.channel.snr_linear = snr.sample(rng);
        }
    }
}
