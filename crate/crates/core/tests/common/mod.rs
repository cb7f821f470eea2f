//! Reference implementations that share no code with the library.

#![allow(dead_code)]

use std::collections::HashMap;

use tmis_core::generate::{random_mdp, random_policy};
use tmis_core::rng;
use tmis_core::{Dataset, Policy, RewardNoise, TabularMdp};

/// One complete `(s, a)` path with its probability and the mean and
/// variance of its return.
#[derive(Debug, Clone, Copy)]
pub struct PathMoments {
    pub prob: f64,
    pub mean: f64,
    pub var: f64,
}

/// Enumerates every state-action path of positive probability.
pub fn enumerate_paths(mdp: &TabularMdp, pi: &Policy) -> Vec<PathMoments> {
    let mut out = Vec::new();
    for s in 0..mdp.num_states() {
        let p = mdp.initial()[s];
        if p > 0.0 {
            walk(mdp, pi, 0, s, PathMoments { prob: p, mean: 0.0, var: 0.0 }, &mut out);
        }
    }
    out
}

fn walk(mdp: &TabularMdp, pi: &Policy, t: usize, s: usize, acc: PathMoments, out: &mut Vec<PathMoments>) {
    for a in 0..mdp.num_actions() {
        let pa = pi.prob(t, s, a);
        if pa == 0.0 {
            continue;
        }
        let here = PathMoments {
            prob: acc.prob * pa,
            mean: acc.mean + mdp.mean_reward(t, s, a),
            var: acc.var + mdp.reward_variance(t, s, a),
        };
        if t + 1 == mdp.horizon() {
            out.push(here);
            continue;
        }
        for (next, &p) in mdp.transition(t, s, a).iter().enumerate() {
            if p > 0.0 {
                walk(mdp, pi, t + 1, next, PathMoments { prob: here.prob * p, ..here }, out);
            }
        }
    }
}

/// `E[sum r]` by enumeration.
pub fn oracle_value(mdp: &TabularMdp, pi: &Policy) -> f64 {
    enumerate_paths(mdp, pi).iter().map(|p| p.prob * p.mean).sum()
}

/// `Var[sum r]` by enumeration, including reward noise.
pub fn oracle_variance(mdp: &TabularMdp, pi: &Policy) -> f64 {
    let paths = enumerate_paths(mdp, pi);
    let m: f64 = paths.iter().map(|p| p.prob * p.mean).sum();
    paths.iter().map(|p| p.prob * (p.var + (p.mean - m) * (p.mean - m))).sum()
}

/// Tabular-MIS written directly from counts in hash maps: estimated
/// marginals `d_t(s)` are propagated with empirical transitions of the
/// target policy and dotted with empirical mean rewards.
pub fn oracle_tmis(data: &Dataset, pi: &Policy) -> f64 {
    let (h, ns) = (data.horizon(), data.num_states());
    let mut n_sa: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut r_sum: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut n_next: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut d: Vec<f64> = vec![0.0; ns];
    for ep in data.episodes() {
        d[ep.steps[0].state as usize] += 1.0 / data.len() as f64;
        for t in 0..h {
            let st = ep.steps[t];
            let key = (t, st.state as usize, st.action as usize);
            *n_sa.entry(key).or_default() += 1.0;
            *r_sum.entry(key).or_default() += st.reward;
            if t + 1 < h {
                *n_next.entry((t, key.1, key.2, ep.steps[t + 1].state as usize)).or_default() += 1.0;
            }
        }
    }
    let mut total = 0.0;
    for t in 0..h {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..data.num_actions() {
                let Some(&c) = n_sa.get(&(t, s, a)) else { continue };
                let w = d[s] * pi.prob(t, s, a);
                total += w * r_sum[&(t, s, a)] / c;
                for (x, slot) in next.iter_mut().enumerate() {
                    *slot += w * n_next.get(&(t, s, a, x)).copied().unwrap_or(0.0) / c;
                }
            }
        }
        d = next;
    }
    total
}

/// Random model, logging and target policy from one seed.
pub fn random_instance(seed: u64, ns: usize, na: usize, h: usize, noise: RewardNoise) -> (TabularMdp, Policy, Policy) {
    let mut r = rng::stream(seed);
    let mdp = random_mdp(ns, na, h, noise, &mut r);
    let mu = random_policy(h, ns, na, 0.3, &mut r);
    let pi = random_policy(h, ns, na, 0.0, &mut r);
    (mdp, mu, pi)
}

pub fn noise_of(bernoulli: bool) -> RewardNoise {
    if bernoulli {
        RewardNoise::Bernoulli
    } else {
        RewardNoise::Deterministic
    }
}

/// Mean and standard error of `xs`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
