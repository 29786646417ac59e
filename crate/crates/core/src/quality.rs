//! Synthetic content quality.
//!
//! Stands in for an external scorer of generated text: each subtask gets a
//! score in `[0, 10]` depending on whether the expert's specialty matches the
//! subtask topic and on where it ran, and the gating weights fold the scores
//! into one total.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scenario::{ExpertProfile, Subtask, Task};
use crate::{Error, Result, SeededRng};

pub const MAX_QUALITY: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QualityScore(f64);

impl QualityScore {
    /// Clamps into `[0, 10]`.
    pub fn new(value: f64) -> Self {
        QualityScore(value.clamp(0.0, MAX_QUALITY))
    }

    pub const ZERO: QualityScore = QualityScore(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Local,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingMode {
    #[default]
    Uniform,
    SizeProportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatingWeights(Vec<f64>);

impl GatingWeights {
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

/// Scores one subtask. Draws one normal sample from `rng` iff `sigma > 0`.
pub fn subtask_quality(
    expert: &ExpertProfile,
    subtask: &Subtask,
    placement: Placement,
    local_bonus: f64,
    rng: &mut SeededRng,
    sigma: f64,
) -> QualityScore {
    let mut base = expert.base_quality(subtask.topic);
    if placement == Placement::Local {
        base += local_bonus;
    }
    QualityScore::new(base + noise(rng, sigma))
}

pub(crate) fn noise(rng: &mut SeededRng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .expect("sigma is positive and finite")
            .sample(rng)
    } else {
        0.0
    }
}

pub fn gating_weights(task: &Task, mode: GatingMode) -> GatingWeights {
    let k = task.subtasks.len();
    let weights = match mode {
        GatingMode::Uniform => vec![1.0 / k as f64; k],
        GatingMode::SizeProportional => {
            let total: u64 = task.subtasks.iter().map(|s| s.output_bits).sum();
            task.subtasks
                .iter()
                .map(|s| s.output_bits as f64 / total as f64)
                .collect()
        }
    };
    GatingWeights(weights)
}

/// `scale * sum_i w_i * q_i`. Weights are used as given, never renormalized.
pub fn aggregate_quality(scores: &[QualityScore], weights: &GatingWeights, scale: f64) -> Result<f64> {
    if scores.len() != weights.len() {
        return Err(Error::Shape {
            expected: weights.len(),
            actual: scores.len(),
        });
    }
    let weighted: f64 = scores
        .iter()
        .zip(&weights.0)
        .map(|(q, w)| w * q.value())
        .sum();
    Ok(scale * weighted)
}
