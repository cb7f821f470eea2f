//! The time-varying, non-mixing two-state benchmark environment.
//!
//! States `0` (absorbing, "s0") and `1` ("s1"); actions `0` and `1`.
//! From state 1, one action per step is risky: it reaches state 0 with
//! probability `2/H` and otherwise stays; the other action stays in state 1
//! surely. Which action is risky at step `t` is decided by a coin
//! `p_t ~ U[0, 1)`: action 0 when `p_t < 0.5`, action 1 otherwise. The
//! coins are the first draws of [`rng::stream`]`(p_seed)`, so the sequence
//! for a shorter horizon is a prefix of the one for a longer horizon.
//!
//! Reward is 1 in state 0 during the second half of the episode
//! (1-based step `> H/2`) and 0 elsewhere, with no noise. Episodes start in
//! state 1. The logging policy is uniform; the target policy is uniform in
//! state 0 and plays `(1/4, 3/4)` in state 1.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::model::{Policy, RewardNoise, TabularMdp};
use crate::{rng, Error, Result};

pub const DEFAULT_P_SEED: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PaperEnv {
    pub mdp: TabularMdp,
    pub mu: Policy,
    pub pi: Policy,
    /// Risky action in state 1 for each transition step `0..H-1`.
    pub risky_actions: Vec<usize>,
}

/// Draws `count` coins from the documented stream.
pub fn coin_sequence(p_seed: u64, count: usize) -> Vec<f64> {
    let mut r = rng::stream(p_seed);
    (0..count).map(|_| r.random::<f64>()).collect()
}

pub fn build_paper_mdp(horizon: usize, p_seed: u64) -> Result<PaperEnv> {
    if horizon < 2 || !horizon.is_multiple_of(2) {
        return Err(Error::config(alloc::format!("horizon must be even and at least 2, got {horizon}")));
    }
    let coins = coin_sequence(p_seed, horizon);
    let risky_actions: Vec<usize> = coins[..horizon - 1].iter().map(|&p| usize::from(p >= 0.5)).collect();
    let leave = 2.0 / horizon as f64;
    let mdp = TabularMdp::from_fns(
        2,
        2,
        horizon,
        vec![0.0, 1.0],
        |t, s, a| match (s, a == risky_actions[t]) {
            (0, _) => vec![1.0, 0.0],
            (_, true) => vec![leave, 1.0 - leave],
            (_, false) => vec![0.0, 1.0],
        },
        // 0-based step t is 1-based step t + 1
        |t, s, _| if s == 0 && 2 * (t + 1) > horizon { 1.0 } else { 0.0 },
        RewardNoise::Deterministic,
        1.0,
    )?;
    let mu = Policy::uniform(horizon, 2, 2)?;
    let pi = Policy::from_fn(horizon, 2, 2, |_, s| if s == 0 { vec![0.5, 0.5] } else { vec![0.25, 0.75] })?;
    Ok(PaperEnv { mdp, mu, pi, risky_actions })
}
