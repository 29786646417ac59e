//! Plot-ready text files: the reward-vs-epoch series and the average/final bar table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::baselines::PolicyKind;
use crate::harness::eval::PolicyStats;
use crate::harness::metrics::{read_metrics, MetricsRecord};
use crate::{Error, Result};

pub const CURVE_FILE: &str = "reward_curve.csv";
pub const BARS_FILE: &str = "reward_bars.csv";

#[derive(Debug, Clone)]
pub struct PlotFiles {
    pub curve: PathBuf,
    pub bars: PathBuf,
}

pub fn curve_table(records: &[MetricsRecord]) -> String {
    let mut out = String::from("epoch,sac,upper_bound,benchmark,random\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{}", r.epoch, r.mean_reward, r.ref_upper, r.ref_benchmark, r.ref_random);
    }
    out
}

/// One row per policy. With an evaluation report every row comes from it;
/// otherwise rows come from the training curve (mean over epochs, last epoch)
/// and the oracle row is `NA`.
pub fn bar_table(records: &[MetricsRecord], eval: Option<&[PolicyStats]>) -> Result<String> {
    let mut out = String::from("policy,average_reward,final_reward\n");
    for policy in PolicyKind::ALL {
        let cells = match eval {
            Some(stats) => {
                let s = stats
                    .iter()
                    .find(|s| s.policy == policy.name())
                    .ok_or_else(|| Error::Csv {
                        path: PathBuf::from("<eval>"),
                        message: format!("no row for policy `{policy}`"),
                    })?;
                Some((s.mean_reward, s.final_reward))
            }
            None => {
                let column = |f: fn(&MetricsRecord) -> f64| {
                    let avg = records.iter().map(f).sum::<f64>() / records.len() as f64;
                    (avg, f(records.last().expect("nonempty")))
                };
                match policy {
                    PolicyKind::Sac => Some(column(|r| r.mean_reward)),
                    PolicyKind::Random => Some(column(|r| r.ref_random)),
                    PolicyKind::Benchmark => Some(column(|r| r.ref_benchmark)),
                    PolicyKind::UpperBound => Some(column(|r| r.ref_upper)),
                    PolicyKind::Oracle => None,
                }
            }
        };
        match cells {
            Some((avg, last)) => {
                let _ = writeln!(out, "{policy},{avg},{last}");
            }
            None => {
                let _ = writeln!(out, "{policy},NA,NA");
            }
        }
    }
    Ok(out)
}

pub fn emit_plot_data(metrics: &Path, eval: Option<&Path>, out_dir: &Path) -> Result<PlotFiles> {
    let records = read_metrics(metrics)?;
    if records.is_empty() {
        return Err(Error::Csv {
            path: metrics.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let eval_rows = eval.map(crate::harness::eval::read_eval).transpose()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = PlotFiles {
        curve: out_dir.join(CURVE_FILE),
        bars: out_dir.join(BARS_FILE),
    };
    std::fs::write(&files.curve, curve_table(&records)).map_err(|e| Error::io(&files.curve, e))?;
    let bars = bar_table(&records, eval_rows.as_deref())?;
    std::fs::write(&files.bars, bars).map_err(|e| Error::io(&files.bars, e))?;
    Ok(files)
}
