//! Instance generators for tests, property checks and benchmarks.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::model::{Policy, RewardNoise, TabularMdp};

/// `S = A = 1` chain paying `reward` at every step.
pub fn single_path(horizon: usize, reward: f64) -> (TabularMdp, Policy) {
    let mdp = TabularMdp::from_fns(
        1,
        1,
        horizon,
        vec![1.0],
        |_, _, _| vec![1.0],
        |_, _, _| reward,
        RewardNoise::Deterministic,
        if reward > 0.0 { reward } else { 1.0 },
    )
    .expect("single-path model is valid");
    let pi = Policy::uniform(horizon, 1, 1).expect("valid");
    (mdp, pi)
}

/// A random probability vector whose entries are at least `floor / len`.
pub fn random_simplex<R: Rng + ?Sized>(len: usize, floor: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw
        .iter()
        .map(|x| floor / len as f64 + (1.0 - floor) * x / total)
        .collect();
    normalize(&mut p);
    p
}

fn normalize(p: &mut [f64]) {
    // Fold the rounding residue into the largest entry so the sum is 1 to
    // within an ulp or two.
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let residue = 1.0 - p.iter().sum::<f64>();
    if let Some(m) = p.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *m += residue;
    }
}

/// Random model with full-support transitions and means in `[0, 1]`.
pub fn random_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    noise: RewardNoise,
    rng: &mut R,
) -> TabularMdp {
    let d1 = random_simplex(num_states, 0.2, rng);
    let mut trans = Vec::new();
    for _ in 0..horizon.saturating_sub(1) * num_states * num_actions {
        trans.push(random_simplex(num_states, 0.2, rng));
    }
    let rewards: Vec<f64> = (0..horizon * num_states * num_actions).map(|_| rng.random()).collect();
    let mut it = trans.into_iter();
    let mut rw = rewards.into_iter();
    TabularMdp::from_fns(
        num_states,
        num_actions,
        horizon,
        d1,
        |_, _, _| it.next().unwrap(),
        |_, _, _| rw.next().unwrap(),
        noise,
        1.0,
    )
    .expect("generated model is valid")
}

/// Random model with deterministic (point-mass) transitions and rewards.
pub fn random_deterministic_mdp<R: Rng + ?Sized>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp {
    let mut d1 = vec![0.0; num_states];
    d1[rng.random_range(0..num_states)] = 1.0;
    let rows = horizon.saturating_sub(1) * num_states * num_actions;
    let mut transitions = vec![0.0; rows * num_states];
    for row in transitions.chunks_exact_mut(num_states) {
        row[rng.random_range(0..num_states)] = 1.0;
    }
    let rewards = (0..horizon * num_states * num_actions).map(|_| rng.random()).collect();
    TabularMdp::new(
        num_states,
        num_actions,
        horizon,
        d1,
        transitions,
        rewards,
        RewardNoise::Deterministic,
        1.0,
    )
    .expect("generated model is valid")
}

/// Random policy with every action probability at least `floor / A`.
pub fn random_policy<R: Rng + ?Sized>(
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    floor: f64,
    rng: &mut R,
) -> Policy {
    Policy::from_fn(horizon, num_states, num_actions, |_, _| random_simplex(num_actions, floor, rng))
        .expect("generated policy is valid")
}
