//! Uniform evaluation over all deterministic nonstationary policies.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{exact_value, forward_value};
use crate::estimators::{EmpiricalModel, SplitConfig};
use crate::model::{Dataset, Policy, TabularMdp};
use crate::stats::pairwise_sum;
use crate::{Error, Result};

pub const DEFAULT_POLICY_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct UniformEvaluation {
    /// `max_pi |v_hat_split^pi - v^pi|`.
    pub sup_error: f64,
    /// `argmax_pi v_hat_split^pi`, ties to the smallest encoding.
    pub best_policy: Policy,
    pub best_code: u64,
    pub best_estimate: f64,
    pub num_policies: u64,
}

/// Size of the deterministic class, `A^(H S)`, as a float (it may overflow
/// any integer type).
pub fn class_size(num_states: usize, num_actions: usize, horizon: usize) -> f64 {
    libm::pow(num_actions as f64, (horizon * num_states) as f64)
}

/// Decodes a policy index into per-cell choices. Cell `t * S + s` is the
/// digit of weight `A^(HS - 1 - (t S + s))`, so increasing codes enumerate
/// policies lexicographically.
pub fn decode_policy(code: u64, num_states: usize, num_actions: usize, horizon: usize) -> Vec<usize> {
    let cells = horizon * num_states;
    let mut choices = vec![0; cells];
    let mut rest = code;
    for k in (0..cells).rev() {
        choices[k] = (rest % num_actions as u64) as usize;
        rest /= num_actions as u64;
    }
    choices
}

/// Evaluates every deterministic policy with data-splitting Tabular-MIS and
/// compares against the exact values of `mdp`.
pub fn uniform_evaluate(data: &Dataset, mdp: &TabularMdp, split: SplitConfig, cap: u64) -> Result<UniformEvaluation> {
    let (ns, na, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    if (data.num_states(), data.num_actions(), data.horizon()) != (ns, na, h) {
        return Err(Error::config("dataset dimensions do not match the model"));
    }
    let count = class_size(ns, na, h);
    if count > cap as f64 {
        return Err(Error::TooLarge { what: "deterministic policy class", count, cap });
    }
    let count = count as u64;
    let folds: Vec<EmpiricalModel> = split
        .fold_ranges(data.len())?
        .into_iter()
        .map(|r| EmpiricalModel::from_episodes(ns, na, h, &data.episodes()[r]))
        .collect();
    let initials: Vec<Vec<f64>> = folds.iter().map(|m| m.initial_hat()).collect();

    let mut sup_error = 0.0f64;
    let mut best: Option<(u64, f64)> = None;
    let mut fold_values = vec![0.0; folds.len()];
    for code in 0..count {
        let pi = Policy::deterministic(h, ns, na, &decode_policy(code, ns, na, h))?;
        for (v, (m, d1)) in fold_values.iter_mut().zip(folds.iter().zip(&initials)) {
            *v = forward_value(m, d1, &pi, |_, _| {});
        }
        let estimate = pairwise_sum(&fold_values) / folds.len() as f64;
        let truth = exact_value(mdp, &pi)?.policy_value;
        sup_error = sup_error.max((estimate - truth).abs());
        if best.is_none_or(|(_, b)| estimate > b) {
            best = Some((code, estimate));
        }
    }
    let (best_code, best_estimate) = best.expect("class is nonempty");
    Ok(UniformEvaluation {
        sup_error,
        best_policy: Policy::deterministic(h, ns, na, &decode_policy(best_code, ns, na, h))?,
        best_code,
        best_estimate,
        num_policies: count,
    })
}
