use edgemoe_core::env::{Action, StateVector, Transition};
use edgemoe_core::sac::{log_softmax, softmax, argmax, OptimizerKind, ReplayBuffer, SacAgent, SacConfig, SelectMode};
use edgemoe_core::{seeded_rng, Error};
use proptest::prelude::*;
use rand::Rng;

fn agent(state_dim: usize, actions: usize, cfg: SacConfig) -> SacAgent {
    SacAgent::new(state_dim, actions, cfg, &mut seeded_rng(11, 0)).unwrap()
}

fn small_cfg() -> SacConfig {
    SacConfig {
        hidden: vec![8],
        batch_size: 4,
        buffer_capacity: 64,
        ..Default::default()
    }
}

/// Makes every output of `net` equal to `bias` regardless of input.
fn constant_output(net: &mut edgemoe_core::sac::Mlp, bias: &[f64]) {
    let last = net.layers_mut().last_mut().unwrap();
    last.weights.fill(0.0);
    last.bias.copy_from_slice(bias);
}

fn transition(state: Vec<f64>, action: usize, reward: f64, next: Vec<f64>, done: bool) -> Transition {
    Transition {
        state: StateVector(state),
        action: Action(action),
        reward,
        next_state: StateVector(next),
        done,
    }
}

#[test]
fn critic_target_terminal_is_reward() {
    let a = agent(2, 2, small_cfg());
    let t = transition(vec![0.1, 0.2], 0, 3.25, vec![0.3, 0.4], true);
    assert_eq!(a.critic_target(&[&t]).unwrap(), vec![3.25]);
}

#[test]
fn critic_target_two_action_oracle() {
    let mut a = agent(2, 2, small_cfg());
    constant_output(a.actor_mut(), &[0.7, 0.7]);
    for t in a.targets_mut() {
        constant_output(t, &[1.0, 1.0]);
    }
    let t = transition(vec![0.5, 0.5], 1, 0.0, vec![0.9, 0.1], false);

    a.set_log_alpha(f64::NEG_INFINITY);
    let y = a.critic_target(&[&t]).unwrap()[0];
    assert!((y - 0.99).abs() < 1e-12, "{y}");

    a.set_log_alpha(0.5f64.ln());
    let y = a.critic_target(&[&t]).unwrap()[0];
    // 0.99 * (1 + 0.5 ln 2), 30-digit evaluation.
    assert!((y - 1.333_107_854_377_173).abs() < 1e-9, "{y}");
}

#[test]
fn critic_target_uses_min_of_targets() {
    let mut a = agent(1, 2, small_cfg());
    constant_output(a.actor_mut(), &[0.0, 0.0]);
    constant_output(a.targets_mut()[0], &[2.0, 5.0]);
    constant_output(a.targets_mut()[1], &[3.0, 4.0]);
    a.set_log_alpha(f64::NEG_INFINITY);
    let t = transition(vec![0.0], 0, 1.0, vec![0.0], false);
    // 1 + 0.99 * (0.5 * 2 + 0.5 * 4)
    assert!((a.critic_target(&[&t]).unwrap()[0] - (1.0 + 0.99 * 3.0)).abs() < 1e-12);
}

#[test]
fn fitted_critics_have_zero_loss() {
    let mut a = agent(1, 2, small_cfg());
    for c in a.critics_mut() {
        constant_output(c, &[2.5, 2.5]);
    }
    let t1 = transition(vec![0.2], 0, 2.5, vec![0.0], true);
    let t2 = transition(vec![0.8], 1, 2.5, vec![0.0], true);
    assert_eq!(a.critic_losses(&[&t1, &t2]).unwrap(), (0.0, 0.0));
}

#[test]
fn alpha_gradient_vanishes_at_target_entropy() {
    // Uniform policy and H* = ln N: the temperature must not move under SGD.
    let cfg = SacConfig {
        target_entropy_ratio: 1.0,
        optimizer: OptimizerKind::Sgd,
        alpha_lr: 0.5,
        ..small_cfg()
    };
    let mut a = agent(3, 4, cfg);
    constant_output(a.actor_mut(), &[0.0; 4]);
    let before = a.log_alpha();
    let batch: Vec<Transition> = (0..4).map(|i| transition(vec![0.1 * i as f64; 3], i, 1.0, vec![0.0; 3], true)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    a.update_on(&refs).unwrap();
    assert!((a.log_alpha() - before).abs() < 1e-15);
}

#[test]
fn actor_and_alpha_steps_match_finite_differences() {
    // With plain SGD, (before - after) / lr is exactly the analytic gradient.
    let lr = 1e-3;
    let cfg = SacConfig {
        hidden: vec![6],
        optimizer: OptimizerKind::Sgd,
        actor_lr: lr,
        critic_lr: lr,
        alpha_lr: lr,
        batch_size: 5,
        buffer_capacity: 5,
        target_entropy_ratio: 0.6,
        initial_alpha: 0.7,
        ..Default::default()
    };
    let before = SacAgent::new(3, 4, cfg, &mut seeded_rng(21, 0)).unwrap();
    let mut rng = seeded_rng(22, 0);
    let batch: Vec<Transition> = (0..5)
        .map(|i| {
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            let n: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            transition(s, i % 4, rng.gen_range(-1.0..1.0), n, i % 2 == 0)
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut after = before.clone();
    after.update_on(&refs).unwrap();

    let alpha = before.alpha();
    let [c1, c2] = after.critics();
    let actor_loss = |actor: &edgemoe_core::sac::Mlp| -> f64 {
        batch
            .iter()
            .map(|t| {
                let lp = log_softmax(&actor.forward(t.state.as_slice()).unwrap());
                let q1 = c1.forward(t.state.as_slice()).unwrap();
                let q2 = c2.forward(t.state.as_slice()).unwrap();
                lp.iter().enumerate().map(|(a, l)| l.exp() * (alpha * l - q1[a].min(q2[a]))).sum::<f64>()
            })
            .sum::<f64>()
            / batch.len() as f64
    };
    let h = 1e-5;
    let slots = before.actor().params().len();
    for slot in 0..slots {
        for i in 0..before.actor().params()[slot].len() {
            let analytic = (before.actor().params()[slot][i] - after.actor().params()[slot][i]) / lr;
            let mut plus = before.actor().clone();
            plus.params_mut()[slot][i] += h;
            let mut minus = before.actor().clone();
            minus.params_mut()[slot][i] -= h;
            let numeric = (actor_loss(&plus) - actor_loss(&minus)) / (2.0 * h);
            let diff = (analytic - numeric).abs();
            assert!(diff <= 1e-4 * analytic.abs().max(numeric.abs()) || diff < 1e-7, "{analytic} vs {numeric}");
        }
    }

    // Temperature loss: -log_alpha * mean(sum pi ln pi + H*).
    let target = before.target_entropy();
    let alpha_loss = |log_alpha: f64| -> f64 {
        batch
            .iter()
            .map(|t| {
                let lp = log_softmax(&before.actor().forward(t.state.as_slice()).unwrap());
                -log_alpha * (lp.iter().map(|l| l.exp() * l).sum::<f64>() + target)
            })
            .sum::<f64>()
            / batch.len() as f64
    };
    let analytic = (before.log_alpha() - after.log_alpha()) / lr;
    let numeric = (alpha_loss(before.log_alpha() + h) - alpha_loss(before.log_alpha() - h)) / (2.0 * h);
    assert!((analytic - numeric).abs() <= 1e-6 * numeric.abs().max(1e-3), "{analytic} vs {numeric}");
}

#[test]
fn one_step_on_toy_mdp_lowers_critic_loss() {
    // Two states, two actions, terminal transitions with fixed rewards.
    let cfg = SacConfig {
        hidden: vec![16],
        batch_size: 4,
        buffer_capacity: 4,
        critic_lr: 1e-2,
        optimizer: OptimizerKind::Sgd,
        ..Default::default()
    };
    let mut a = SacAgent::new(2, 2, cfg, &mut seeded_rng(3, 3)).unwrap();
    let s0 = vec![1.0, 0.0];
    let s1 = vec![0.0, 1.0];
    let batch = [
        transition(s0.clone(), 0, 1.0, s0.clone(), true),
        transition(s0.clone(), 1, 0.0, s0.clone(), true),
        transition(s1.clone(), 0, 0.0, s1.clone(), true),
        transition(s1.clone(), 1, 2.0, s1.clone(), true),
    ];
    let refs: Vec<&Transition> = batch.iter().collect();
    let (before1, before2) = a.critic_losses(&refs).unwrap();
    let report = a.update_on(&refs).unwrap();
    assert_eq!((report.critic1_loss, report.critic2_loss), (before1, before2));
    let (after1, after2) = a.critic_losses(&refs).unwrap();
    assert!(after1 < before1 && after2 < before2, "{before1}->{after1}, {before2}->{after2}");
}

#[test]
fn update_needs_a_full_batch() {
    let mut a = agent(1, 2, small_cfg());
    let mut buf = ReplayBuffer::new(10);
    buf.push(transition(vec![0.0], 0, 1.0, vec![0.0], true));
    assert!(matches!(
        a.update(&buf, &mut seeded_rng(0, 0)),
        Err(Error::NotEnoughData { needed: 4, available: 1 })
    ));
}

#[test]
fn polyak_converges_geometrically() {
    let mut a = agent(2, 2, small_cfg());
    let gap0: f64 = a.critics()[0].params().iter().zip(a.targets()[0].params()).map(|(c, t)| c.iter().zip(t).map(|(x, y)| (x - y).abs()).sum::<f64>()).sum();
    for c in a.critics_mut() {
        for p in c.params_mut() {
            p.iter_mut().for_each(|v| *v += 1.0);
        }
    }
    let gap = |a: &SacAgent| -> f64 {
        a.critics()[0]
            .params()
            .iter()
            .zip(a.targets()[0].params())
            .map(|(c, t)| c.iter().zip(t).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum()
    };
    assert_eq!(gap0, 0.0);
    let mut prev = gap(&a);
    for _ in 0..50 {
        a.polyak_update(0.1);
        let g = gap(&a);
        assert!((g - 0.9 * prev).abs() <= 1e-9 * prev);
        prev = g;
    }
}

#[test]
fn seeded_updates_are_bit_identical() {
    let run = || {
        let mut a = agent(3, 3, small_cfg());
        let mut buf = ReplayBuffer::new(64);
        let mut rng = seeded_rng(8, 8);
        for i in 0..32 {
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
            buf.push(transition(s.clone(), i % 3, rng.gen_range(-1.0..1.0), s, i % 3 == 0));
        }
        let mut sample_rng = seeded_rng(9, 9);
        (0..20).map(|_| a.update(&buf, &mut sample_rng).unwrap()).collect::<Vec<_>>()
    };
    let (x, y) = (run(), run());
    for (a, b) in x.iter().zip(&y) {
        for (u, v) in [
            (a.critic1_loss, b.critic1_loss),
            (a.critic2_loss, b.critic2_loss),
            (a.actor_loss, b.actor_loss),
            (a.alpha_loss, b.alpha_loss),
            (a.alpha, b.alpha),
        ] {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}

#[test]
fn sampling_follows_policy() {
    let mut a = agent(1, 3, small_cfg());
    constant_output(a.actor_mut(), &[0.0, 2f64.ln(), f64::NEG_INFINITY]);
    let mut rng = seeded_rng(4, 4);
    let mut counts = [0usize; 3];
    let draws = 30_000;
    for _ in 0..draws {
        counts[a.select_action(&StateVector(vec![0.3]), SelectMode::Sample, &mut rng).unwrap().0] += 1;
    }
    assert_eq!(counts[2], 0);
    // p1 = 2/3; binomial sd = sqrt(n p q).
    let sd = (draws as f64 * 2.0 / 9.0).sqrt();
    assert!((counts[1] as f64 - draws as f64 * 2.0 / 3.0).abs() < 4.0 * sd, "{counts:?}");
}

proptest! {
    #[test]
    fn policy_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 1..40), shift in -100.0f64..100.0) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let q = softmax(&shifted);
        prop_assert_eq!(argmax(&p), argmax(&logits));
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_stays_positive(seed in 0u64..1000) {
        let mut a = SacAgent::new(2, 3, SacConfig { alpha_lr: 0.5, ..small_cfg() }, &mut seeded_rng(seed, 0)).unwrap();
        let batch: Vec<Transition> = (0..4).map(|i| transition(vec![0.25 * i as f64, 0.5], i % 3, 1.0, vec![0.0, 0.0], true)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        for _ in 0..20 {
            let r = a.update_on(&refs).unwrap();
            prop_assert!(r.alpha > 0.0);
        }
    }
}
