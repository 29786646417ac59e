use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const METRICS_HEADER: &str = "epoch,mean_reward,mean_quality,mean_comm_energy_j,mean_compute_cost,critic1_loss,critic2_loss,actor_loss,alpha_loss,alpha,ref_upper,ref_benchmark,ref_random";

/// One row of the training metrics CSV. Field order is the column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub mean_reward: f64,
    pub mean_quality: f64,
    pub mean_comm_energy_j: f64,
    pub mean_compute_cost: f64,
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub ref_upper: f64,
    pub ref_benchmark: f64,
    pub ref_random: f64,
}

impl MetricsRecord {
    pub fn values(&self) -> [f64; 12] {
        [
            self.mean_reward,
            self.mean_quality,
            self.mean_comm_energy_j,
            self.mean_compute_cost,
            self.critic1_loss,
            self.critic2_loss,
            self.actor_loss,
            self.alpha_loss,
            self.alpha,
            self.ref_upper,
            self.ref_benchmark,
            self.ref_random,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    if let Some(bad) = records.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("metrics row for epoch {}", bad.epoch)));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        writer.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.iter().collect::<Vec<_>>().join(",");
    if header != METRICS_HEADER {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: format!("row 1: unexpected header `{header}`"),
        });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                // Row 1 is the header.
                message: format!("row {}: {e}", i + 2),
            })
        })
        .collect()
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}
