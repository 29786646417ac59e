//! Communication energy and compute cost.
//!
//! The default model sends payloads at the Shannon rate `B * log2(1 + snr)`
//! with constant transmit power, so energy is `P * bits / rate`. Compute cost
//! is linear in generated bits. Other models plug in through [`CostModel`].

use serde::{Deserialize, Serialize};

use crate::scenario::{ChannelState, Subtask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommCost {
    pub energy_j: f64,
    pub duration_s: f64,
}

impl std::ops::Add for CommCost {
    type Output = CommCost;

    fn add(self, rhs: CommCost) -> CommCost {
        CommCost {
            energy_j: self.energy_j + rhs.energy_j,
            duration_s: self.duration_s + rhs.duration_s,
        }
    }
}

/// Achievable rate in bits per second.
pub fn transmission_rate(channel: &ChannelState) -> f64 {
    channel.bandwidth_hz * (1.0 + channel.snr_linear).log2()
}

pub fn transfer_energy(channel: &ChannelState, payload_bits: u64) -> Result<CommCost> {
    let rate = transmission_rate(channel);
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::InfeasibleChannel);
    }
    let duration_s = payload_bits as f64 / rate;
    Ok(CommCost {
        energy_j: channel.tx_power_w * duration_s,
        duration_s,
    })
}

/// Prompt down to the device plus generated output back, on the same channel.
pub fn round_trip_energy(channel: &ChannelState, subtask: &Subtask) -> Result<CommCost> {
    Ok(transfer_energy(channel, subtask.prompt_bits)?
        + transfer_energy(channel, subtask.output_bits)?)
}

pub fn compute_cost(output_bits: u64, kappa_c: f64) -> f64 {
    kappa_c * output_bits as f64
}

/// Pluggable cost model used by the environment.
pub trait CostModel {
    fn transfer(&self, channel: &ChannelState, payload_bits: u64) -> Result<CommCost>;

    fn round_trip(&self, channel: &ChannelState, subtask: &Subtask) -> Result<CommCost> {
        Ok(self.transfer(channel, subtask.prompt_bits)?
            + self.transfer(channel, subtask.output_bits)?)
    }

    fn edge_compute(&self, subtask: &Subtask) -> f64;

    fn local_compute(&self, subtask: &Subtask) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShannonCost {
    /// Compute cost per generated bit.
    pub kappa_c: f64,
    pub edge_multiplier: f64,
    pub local_multiplier: f64,
}

impl Default for ShannonCost {
    fn default() -> Self {
        Self {
            kappa_c: 2.5e-5,
            edge_multiplier: 1.0,
            local_multiplier: 1.0,
        }
    }
}

impl ShannonCost {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_c > 0.0 && self.kappa_c.is_finite()) {
            return Err(Error::config("cost.kappa_c", "must be positive and finite"));
        }
        if !(self.edge_multiplier >= 0.0 && self.edge_multiplier.is_finite()) {
            return Err(Error::config("cost.edge_multiplier", "must be nonnegative"));
        }
        if !(self.local_multiplier >= 0.0 && self.local_multiplier.is_finite()) {
            return Err(Error::config("cost.local_multiplier", "must be nonnegative"));
        }
        Ok(())
    }
}

impl CostModel for ShannonCost {
    fn transfer(&self, channel: &ChannelState, payload_bits: u64) -> Result<CommCost> {
        transfer_energy(channel, payload_bits)
    }

    fn edge_compute(&self, subtask: &Subtask) -> f64 {
        self.edge_multiplier * compute_cost(subtask.output_bits, self.kappa_c)
    }

    fn local_compute(&self, subtask: &Subtask) -> f64 {
        self.local_multiplier * compute_cost(subtask.output_bits, self.kappa_c)
    }
}
