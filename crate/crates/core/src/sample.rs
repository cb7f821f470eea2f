//! Episode sampling.

use alloc::vec::Vec;
use rand::Rng;

use crate::model::{Dataset, Policy, RewardNoise, Step, TabularMdp, Trajectory};
use crate::rng;
use crate::Result;

/// Inverse-CDF draw from a probability vector. Falls back to the last index
/// with positive mass so rounding in the cumulative sum never selects a
/// zero-probability outcome.
pub fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn draw_reward<R: Rng + ?Sized>(noise: RewardNoise, mean: f64, rng: &mut R) -> f64 {
    match noise {
        RewardNoise::Deterministic => mean,
        RewardNoise::Bernoulli => {
            if rng.random::<f64>() < mean {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Rolls out one episode of `policy` in `mdp`.
pub fn sample_trajectory<R: Rng + ?Sized>(mdp: &TabularMdp, policy: &Policy, rng: &mut R) -> Result<Trajectory> {
    mdp.check_policy(policy)?;
    Ok(rollout(mdp, policy, rng))
}

fn rollout<R: Rng + ?Sized>(mdp: &TabularMdp, policy: &Policy, rng: &mut R) -> Trajectory {
    let h = mdp.horizon();
    let mut steps = Vec::with_capacity(h);
    let mut s = categorical(mdp.initial(), rng);
    for t in 0..h {
        let a = categorical(policy.row(t, s), rng);
        let r = draw_reward(mdp.noise(), mdp.mean_reward(t, s, a), rng);
        steps.push(Step::new(s, a, r));
        if t + 1 < h {
            s = categorical(mdp.transition(t, s, a), rng);
        }
    }
    Trajectory::new(steps)
}

/// Stream used for episode `index` of a dataset drawn with `seed`.
pub fn episode_stream(seed: u64, index: u64) -> rng::Stream {
    rng::substream(seed, &[], index)
}

/// Draws `n` episodes; episode `i` uses [`episode_stream`]`(seed, i)`.
pub fn sample_dataset(mdp: &TabularMdp, policy: &Policy, n: usize, seed: u64) -> Result<Dataset> {
    mdp.check_policy(policy)?;
    if n == 0 {
        return Err(crate::Error::config("n must be at least 1"));
    }
    let episodes = (0..n)
        .map(|i| rollout(mdp, policy, &mut episode_stream(seed, i as u64)))
        .collect();
    Ok(Dataset::from_parts_unchecked(
        mdp.num_states(),
        mdp.num_actions(),
        mdp.horizon(),
        episodes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::single_path;
    use alloc::vec;

    #[test]
    fn single_path_rollout() {
        let (mdp, pi) = single_path(3, 1.0);
        let traj = sample_trajectory(&mdp, &pi, &mut rng::stream(1)).unwrap();
        assert_eq!(traj.steps, vec![Step::new(0, 0, 1.0); 3]);
    }

    #[test]
    fn zero_rewards_stay_zero() {
        let mdp = TabularMdp::from_fns(
            2,
            2,
            4,
            vec![0.5, 0.5],
            |_, _, _| vec![0.5, 0.5],
            |_, _, _| 0.0,
            RewardNoise::Bernoulli,
            1.0,
        )
        .unwrap();
        let mu = Policy::uniform(4, 2, 2).unwrap();
        let data = sample_dataset(&mdp, &mu, 50, 3).unwrap();
        assert!(data.episodes().iter().flat_map(|e| &e.steps).all(|s| s.reward == 0.0));
    }

    #[test]
    fn dataset_is_seed_deterministic() {
        let mdp = crate::env::build_paper_mdp(6, 100).unwrap();
        let a = sample_dataset(&mdp.mdp, &mdp.mu, 20, 9).unwrap();
        let b = sample_dataset(&mdp.mdp, &mdp.mu, 20, 9).unwrap();
        let c = sample_dataset(&mdp.mdp, &mdp.mu, 20, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn n_one_matches_single_rollout() {
        let env = crate::env::build_paper_mdp(6, 100).unwrap();
        let data = sample_dataset(&env.mdp, &env.mu, 1, 42).unwrap();
        let traj = sample_trajectory(&env.mdp, &env.mu, &mut episode_stream(42, 0)).unwrap();
        assert_eq!(data.episodes(), &[traj]);
    }

    #[test]
    fn degenerate_dynamics_ignore_seed() {
        let (mdp, pi) = single_path(5, 1.0);
        assert_eq!(
            sample_dataset(&mdp, &pi, 4, 1).unwrap(),
            sample_dataset(&mdp, &pi, 4, 2).unwrap()
        );
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let (mdp, _) = single_path(3, 1.0);
        let wrong = Policy::uniform(2, 1, 1).unwrap();
        assert!(matches!(
            sample_trajectory(&mdp, &wrong, &mut rng::stream(0)),
            Err(crate::Error::Config(_))
        ));
    }
}
