use std::fmt::Write as _;
use std::path::Path;

use crate::baselines::PolicyKind;
use crate::harness::config::RunConfig;
use crate::harness::eval::{evaluate, EvalReport, EVAL_FILE};
use crate::harness::metrics::MetricsRecord;
use crate::harness::train::train;
use crate::{Error, Result};

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub eval: EvalReport,
}

impl SeedResult {
    /// Mean training reward over the first and last `fraction` of epochs.
    pub fn curve_ends(&self, fraction: f64) -> (f64, f64) {
        let n = self.records.len();
        let k = ((n as f64 * fraction).round() as usize).clamp(1, n);
        let mean = |rs: &[MetricsRecord]| rs.iter().map(|r| r.mean_reward).sum::<f64>() / rs.len() as f64;
        (mean(&self.records[..k]), mean(&self.records[n - k..]))
    }
}

/// Trains and evaluates `seeds` consecutive seeds starting at `config.seed`,
/// each in `out_dir/seed-<s>`, on up to `jobs` threads.
pub fn sweep(config: &RunConfig, seeds: usize, jobs: usize, out_dir: &Path) -> Result<Vec<SeedResult>> {
    config.validate()?;
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| config.seed + i).collect();
    let run = |seed: u64| -> Result<SeedResult> {
        let cfg = config.with_seed(seed);
        let dir = out_dir.join(format!("seed-{seed}"));
        let outcome = train(&cfg, &dir)?;
        let eval = evaluate(&outcome.agent, &cfg)?;
        eval.write(&dir.join(EVAL_FILE))?;
        Ok(SeedResult {
            seed,
            records: outcome.records,
            eval,
        })
    };
    let jobs = jobs.max(1);
    let mut results = Vec::with_capacity(seeds);
    for chunk in seed_list.chunks(jobs) {
        let chunk_results: Vec<Result<SeedResult>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().map(|&s| scope.spawn(move || run(s))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        });
        for r in chunk_results {
            results.push(r?);
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(SWEEP_FILE);
    std::fs::write(&path, summary_table(&results)).map_err(|e| Error::io(&path, e))?;
    Ok(results)
}

pub fn summary_table(results: &[SeedResult]) -> String {
    let mut out = String::from("seed");
    for p in PolicyKind::ALL {
        let _ = write!(out, ",{p}");
    }
    out.push_str(",curve_first_10pct,curve_last_10pct\n");
    for r in results {
        let _ = write!(out, "{}", r.seed);
        for p in PolicyKind::ALL {
            let _ = write!(out, ",{}", r.eval.mean(p));
        }
        let (first, last) = r.curve_ends(0.1);
        let _ = writeln!(out, ",{first},{last}");
    }
    out
}
