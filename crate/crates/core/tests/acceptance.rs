//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.
//!
//! The learning criteria train the default configuration on five seeds, which
//! takes several minutes on one core.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use edgemoe_core::baselines::{device_rewards, oracle_select, random_policy, upper_bound_reward, PolicyKind};
use edgemoe_core::cost::{transfer_energy, transmission_rate, ShannonCost};
use edgemoe_core::env::{Action, Env, RewardConfig, StateVector, Transition};
use edgemoe_core::harness::{sweep, train, RunConfig, SeedResult, CHECKPOINT_FILE, METRICS_FILE};
use edgemoe_core::sac::{Mlp, SacAgent, SacConfig, SelectMode};
use edgemoe_core::scenario::{build_scenario, ChannelState, ScenarioConfig};
use edgemoe_core::seeded_rng;
use rand::Rng;

type Verdict = Result<String, String>;

const SEEDS: u64 = 5;
const SEED_BUDGET: Duration = Duration::from_secs(600);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Sweep {
    results: Vec<SeedResult>,
    runtimes: Vec<Duration>,
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<Sweep, String> {
    let mut results = Vec::new();
    let mut runtimes = Vec::new();
    for seed in 0..SEEDS {
        let start = Instant::now();
        let mut r = sweep(&cfg.with_seed(seed), 1, 1, dir).map_err(|e| e.to_string())?;
        runtimes.push(start.elapsed());
        results.push(r.remove(0));
    }
    Ok(Sweep { results, runtimes })
}

fn ordering(s: &Sweep) -> Verdict {
    let wins = s
        .results
        .iter()
        .filter(|r| {
            let sac = r.eval.mean(PolicyKind::Sac);
            sac > r.eval.mean(PolicyKind::Random) && sac > r.eval.mean(PolicyKind::Benchmark)
        })
        .count();
    let slowest = s.runtimes.iter().max().copied().unwrap_or_default();
    let detail = format!("sac beats random and benchmark on {wins}/{SEEDS} seeds; slowest seed {:.1}s", slowest.as_secs_f64());
    ensure(wins >= 4, || detail.clone())?;
    ensure(slowest <= SEED_BUDGET, || detail.clone())?;
    Ok(detail)
}

fn gap(s: &Sweep) -> Verdict {
    let mut worst_upper = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for r in &s.results {
        let sac = r.eval.mean(PolicyKind::Sac);
        let upper = r.eval.mean(PolicyKind::UpperBound);
        let oracle = r.eval.mean(PolicyKind::Oracle);
        worst_upper = worst_upper.max((upper - sac) / upper.abs());
        worst_oracle = worst_oracle.max((oracle - sac) / oracle.abs());
    }
    let detail = format!(
        "worst gap to upper bound {:.2}% (limit 10%), to oracle {:.2}% (limit 5%)",
        100.0 * worst_upper,
        100.0 * worst_oracle
    );
    ensure(worst_upper <= 0.10 && worst_oracle <= 0.05, || detail.clone())?;
    Ok(detail)
}

fn curve(s: &Sweep) -> Verdict {
    let ends: Vec<(f64, f64)> = s.results.iter().map(|r| r.curve_ends(0.1)).collect();
    let detail = ends
        .iter()
        .zip(&s.results)
        .map(|((a, b), r)| format!("seed {} {a:.3}->{b:.3}", r.seed))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(ends.iter().all(|(a, b)| b > a), || detail.clone())?;
    Ok(detail)
}

fn dominance(agent: &SacAgent) -> Verdict {
    let scenario = build_scenario(&ScenarioConfig::default(), 0).map_err(|e| e.to_string())?;
    let mut env = Env::new(scenario, RewardConfig::default().noiseless(), ShannonCost::default());
    let mut rng = seeded_rng(404, 0);
    let slack = 1e-9;
    let tasks = 10_000;
    for i in 0..tasks {
        let state = env.reset(&mut rng);
        let task = env.task().unwrap().clone();
        let upper = upper_bound_reward(&task, env.scenario(), env.reward_config(), env.cost_model(), &mut rng)
            .map_err(|e| e.to_string())?
            .reward;
        let per_device = device_rewards(&env).map_err(|e| e.to_string())?;
        let (_, oracle) = oracle_select(&env).map_err(|e| e.to_string())?;
        let worst = per_device.iter().map(|b| b.reward).fold(f64::INFINITY, f64::min);
        let choices = [
            random_policy(env.num_devices(), &mut rng),
            agent.select_action(&state, SelectMode::Greedy, &mut rng).map_err(|e| e.to_string())?,
        ];
        for Action(a) in choices {
            let mut probe = env.clone();
            let realized = probe.step(Action(a), &mut rng).map_err(|e| e.to_string())?.breakdown.reward;
            ensure(
                upper >= oracle.reward - slack && oracle.reward >= realized - slack && realized >= worst - slack,
                || format!("task {i}: upper {upper} oracle {} realized {realized} min {worst}", oracle.reward),
            )?;
        }
    }
    Ok(format!("{tasks} noiseless tasks; random and trained greedy policies checked"))
}

fn cost_exactness() -> Verdict {
    let ch = ChannelState {
        snr_linear: 15.0,
        bandwidth_hz: 1000.0,
        tx_power_w: 0.1,
    };
    let rate = transmission_rate(&ch);
    let energy = transfer_energy(&ch, 8000).map_err(|e| e.to_string())?.energy_j;
    ensure(((rate - 4000.0) / 4000.0).abs() <= 1e-12, || format!("rate {rate}"))?;
    ensure(((energy - 0.2) / 0.2).abs() <= 1e-12, || format!("energy {energy}"))?;

    let mut rng = seeded_rng(505, 0);
    for _ in 0..10_000 {
        let base = ChannelState {
            snr_linear: rng.gen_range(0.01..100.0),
            bandwidth_hz: rng.gen_range(100.0..1e6),
            tx_power_w: rng.gen_range(0.01..2.0),
        };
        let better = ChannelState {
            snr_linear: base.snr_linear * rng.gen_range(1.01..3.0),
            ..base
        };
        let bits = rng.gen_range(1..100_000u64);
        let more = bits + rng.gen_range(1..100_000u64);
        let e = |c: &ChannelState, b: u64| transfer_energy(c, b).unwrap().energy_j;
        ensure(transmission_rate(&better) > transmission_rate(&base), || format!("rate not increasing at {base:?}"))?;
        ensure(e(&better, bits) < e(&base, bits), || format!("energy not decreasing in snr at {base:?}"))?;
        ensure(e(&base, more) > e(&base, bits), || format!("energy not increasing in bits at {base:?}"))?;
    }
    Ok(format!("rate {rate} bit/s, energy {energy} J; 10000 random channels monotone"))
}

fn numeric_gradients(net: &Mlp, loss: impl Fn(&Mlp) -> f64, h: f64) -> Vec<Vec<f64>> {
    let lens: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    lens.into_iter()
        .enumerate()
        .map(|(slot, len)| {
            (0..len)
                .map(|i| {
                    let mut plus = net.clone();
                    plus.params_mut()[slot][i] += h;
                    let mut minus = net.clone();
                    minus.params_mut()[slot][i] -= h;
                    (loss(&plus) - loss(&minus)) / (2.0 * h)
                })
                .collect()
        })
        .collect()
}

fn numerical_core() -> Verdict {
    // Finite differences on random small networks.
    let mut rng = seeded_rng(606, 0);
    let mut worst = 0.0f64;
    for n in 0..100 {
        let depth = rng.gen_range(1..=3);
        let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=6)).collect();
        let net = Mlp::new(&sizes, &mut rng).map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic = net.backward(&x, &u).map_err(|e| e.to_string())?;
        let numeric = numeric_gradients(&net, |m| m.forward(&x).unwrap().iter().zip(&u).map(|(o, w)| o * w).sum(), 1e-5);
        for (a, g) in analytic.slices().iter().zip(&numeric) {
            for (p, q) in a.iter().zip(g) {
                let diff = (p - q).abs();
                let scale = p.abs().max(q.abs());
                if scale > 0.0 {
                    worst = worst.max(diff / scale);
                }
                ensure(diff < 1e-8 || diff <= 1e-4 * scale, || format!("network {n} {sizes:?}: {p} vs {q}"))?;
            }
        }
    }

    // Two actions, uniform policy, both target critics output 1, alpha 0.5.
    let cfg = SacConfig {
        hidden: vec![8],
        ..Default::default()
    };
    let mut agent = SacAgent::new(2, 2, cfg, &mut seeded_rng(607, 0)).map_err(|e| e.to_string())?;
    let flatten = |net: &mut Mlp, bias: f64| {
        let last = net.layers_mut().last_mut().unwrap();
        last.weights.fill(0.0);
        last.bias.fill(bias);
    };
    flatten(agent.actor_mut(), 0.3);
    for t in agent.targets_mut() {
        flatten(t, 1.0);
    }
    agent.set_log_alpha(0.5f64.ln());
    let t = Transition {
        state: StateVector(vec![0.2, 0.7]),
        action: Action(0),
        reward: 0.0,
        next_state: StateVector(vec![0.9, 0.4]),
        done: false,
    };
    let y = agent.critic_target(&[&t]).map_err(|e| e.to_string())?[0];
    let expected = 1.333_107_854_377_173;
    ensure((y - expected).abs() <= 1e-9, || format!("critic target {y} vs {expected}"))?;

    // Polyak averaging, element by element.
    for c in agent.critics_mut() {
        for p in c.params_mut() {
            p.iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0));
        }
    }
    let before = agent.clone();
    let tau = 0.005;
    agent.polyak_update(tau);
    for k in 0..2 {
        for ((s, d0), d1) in before.critics()[k]
            .params()
            .iter()
            .zip(before.targets()[k].params())
            .zip(agent.targets()[k].params())
        {
            for ((s, d0), d1) in s.iter().zip(d0.iter()).zip(d1.iter()) {
                let want = tau * s + (1.0 - tau) * d0;
                ensure(want.to_bits() == d1.to_bits(), || format!("polyak {d1} vs {want}"))?;
            }
        }
    }
    Ok(format!("100 networks, worst relative gradient error {worst:.2e}; critic target {y:.12}; polyak exact"))
}

fn determinism(cfg: &RunConfig, sweep_dir: &Path, scratch: &Path) -> Verdict {
    let again = train(&cfg.with_seed(0), scratch).map_err(|e| e.to_string())?;
    let first = std::fs::read(sweep_dir.join("seed-0").join(METRICS_FILE)).map_err(|e| e.to_string())?;
    let second = std::fs::read(&again.metrics_path).map_err(|e| e.to_string())?;
    ensure(first == second, || "metrics differ between identical runs".into())?;
    Ok(format!("seed 0 retrained; {} byte metrics file identical", first.len()))
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let sweep_dir = tempfile::tempdir().expect("temp dir");
    let scratch = tempfile::tempdir().expect("temp dir");

    let learned = run_sweep(&cfg, sweep_dir.path());
    let from_sweep = |f: fn(&Sweep) -> Verdict| learned.as_ref().map_err(Clone::clone).and_then(f);
    let agent = SacAgent::load(&sweep_dir.path().join("seed-0").join(CHECKPOINT_FILE)).map_err(|e| e.to_string());

    let verdicts: [(&str, Verdict); 7] = [
        ("1 ordering vs random and benchmark", from_sweep(ordering)),
        ("2 gap to upper bound and oracle", from_sweep(gap)),
        ("3 learning curve rises", from_sweep(curve)),
        ("4 dominance chain", agent.and_then(|a| dominance(&a))),
        ("5 cost model exactness", cost_exactness()),
        ("6 numerical core", numerical_core()),
        ("7 determinism", determinism(&cfg, sweep_dir.path(), scratch.path())),
    ];

    if let Ok(s) = &learned {
        for r in &s.results {
            let m = |p| r.eval.mean(p);
            println!(
                "  seed {}: sac {:.3} random {:.3} benchmark {:.3} upper {:.3} oracle {:.3}",
                r.seed,
                m(PolicyKind::Sac),
                m(PolicyKind::Random),
                m(PolicyKind::Benchmark),
                m(PolicyKind::UpperBound),
                m(PolicyKind::Oracle)
            );
        }
    }
    let mut failed = 0;
    for (name, v) in &verdicts {
        match v {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {name}: {reason}");
            }
        }
    }
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
