use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use super::EmpiricalModel;
use crate::dp::{forward_value, marginal_distributions, ForwardModel, MarginalDistributions};
use crate::model::{Dataset, Policy, TabularMdp, Trajectory};
use crate::stats::pairwise_sum;
use crate::{Error, Result};

/// Advisory counters collected alongside a Tabular-MIS estimate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TmisDiagnostics {
    /// `(t, s, a)` cells with no observations.
    pub empty_cells: usize,
    /// Per step, the number of states with zero estimated target mass.
    pub zero_mass_states: Vec<usize>,
    /// Per step, the total estimated target mass `sum_s d_hat_t(s)`; below 1
    /// once mass reaches unvisited cells.
    pub state_mass: Vec<f64>,
}

/// Tabular-MIS: roll the target policy through the count-based model and sum
/// the estimated per-step rewards. Needs no knowledge of the logging policy.
pub fn estimate_tmis(data: &Dataset, pi: &Policy) -> Result<f64> {
    data.check_policy(pi)?;
    Ok(tmis_on(data, data.episodes(), pi))
}

pub fn estimate_tmis_with_diagnostics(data: &Dataset, pi: &Policy) -> Result<(f64, TmisDiagnostics)> {
    data.check_policy(pi)?;
    let model = EmpiricalModel::from_dataset(data);
    let mut zero_mass_states = Vec::with_capacity(data.horizon());
    let mut state_mass = Vec::with_capacity(data.horizon());
    let value = forward_value(&model, &model.initial_hat(), pi, |_, d| {
        zero_mass_states.push(d.iter().filter(|&&x| x == 0.0).count());
        state_mass.push(d.iter().sum());
    });
    Ok((value, TmisDiagnostics { empty_cells: model.empty_cells(), zero_mass_states, state_mass }))
}

fn tmis_on(data: &Dataset, episodes: &[Trajectory], pi: &Policy) -> f64 {
    let model = EmpiricalModel::from_episodes(data.num_states(), data.num_actions(), data.horizon(), episodes);
    forward_value(&model, &model.initial_hat(), pi, |_, _| {})
}

/// How episodes are partitioned for data-splitting Tabular-MIS.
///
/// Folds are contiguous in episode order with `M = floor(n / N)` episodes
/// each; the `n - N * M` leftover episodes join the last fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitConfig {
    /// Fixed number of folds `N`.
    Folds(usize),
    /// Fixed fold size `M`; `N = floor(n / M)`.
    FoldSize(usize),
    /// `M = floor(sqrt(n))`.
    SqrtFoldSize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig::Folds(1)
    }
}

impl SplitConfig {
    /// `(N, M)` for `n` episodes.
    pub fn layout(self, n: usize) -> Result<(usize, usize)> {
        let (folds, size) = match self {
            SplitConfig::Folds(k) => (k, n.checked_div(k).unwrap_or(0)),
            SplitConfig::FoldSize(m) => (n.checked_div(m).unwrap_or(0), m),
            SplitConfig::SqrtFoldSize => {
                let m = (libm::floor(libm::sqrt(n as f64)) as usize).max(1);
                (n / m, m)
            }
        };
        if folds == 0 || size == 0 || folds > n {
            return Err(Error::config(format!("cannot split n = {n} episodes with {self:?}")));
        }
        Ok((folds, size))
    }

    pub fn num_folds(self, n: usize) -> Result<usize> {
        Ok(self.layout(n)?.0)
    }

    pub fn fold_ranges(self, n: usize) -> Result<Vec<Range<usize>>> {
        let (folds, size) = self.layout(n)?;
        Ok((0..folds)
            .map(|i| i * size..if i + 1 == folds { n } else { (i + 1) * size })
            .collect())
    }
}

/// Mean of per-fold Tabular-MIS estimates.
pub fn estimate_split_tmis(data: &Dataset, pi: &Policy, split: SplitConfig) -> Result<f64> {
    data.check_policy(pi)?;
    let ranges = split.fold_ranges(data.len())?;
    let values: Vec<f64> = ranges
        .iter()
        .map(|r| tmis_on(data, &data.episodes()[r.clone()], pi))
        .collect();
    Ok(pairwise_sum(&values) / values.len() as f64)
}

/// Default threshold parameter `min(1/2, sqrt(4 ln n / (n * d_m_sa)))`,
/// kept strictly inside `(0, 1)`.
pub fn default_theta(n: usize, d_m_sa: f64) -> f64 {
    let n = n as f64;
    libm::sqrt(4.0 * libm::log(n) / (n * d_m_sa)).clamp(f64::EPSILON, 0.5)
}

/// Settings for the fictitious estimator: the threshold parameter plus the
/// true model and logging policy it substitutes from.
#[derive(Debug, Clone)]
pub struct FictitiousConfig<'a> {
    theta: f64,
    mdp: &'a TabularMdp,
    mu_marginals: MarginalDistributions,
}

impl<'a> FictitiousConfig<'a> {
    pub fn new(theta: f64, mdp: &'a TabularMdp, mu: &Policy) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::config(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(FictitiousConfig { theta, mdp, mu_marginals: marginal_distributions(mdp, mu)? })
    }

    /// Uses [`default_theta`] for a dataset of `n` episodes.
    pub fn with_default_theta(mdp: &'a TabularMdp, mu: &Policy, n: usize) -> Result<Self> {
        let ratios = crate::dp::diagnostic_ratios(mdp, mu, mu)?;
        Self::new(default_theta(n, ratios.d_m_sa), mdp, mu)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

struct FictitiousModel<'a> {
    empirical: EmpiricalModel,
    truth: &'a TabularMdp,
    keep: Vec<bool>,
}

impl FictitiousModel<'_> {
    #[inline]
    fn cell(&self, t: usize, s: usize, a: usize) -> usize {
        (t * self.truth.num_states() + s) * self.truth.num_actions() + a
    }
}

impl ForwardModel for FictitiousModel<'_> {
    fn dims(&self) -> (usize, usize, usize) {
        self.empirical.dims()
    }

    fn reward(&self, t: usize, s: usize, a: usize) -> f64 {
        if self.keep[self.cell(t, s, a)] {
            self.empirical.r_hat(t, s, a)
        } else {
            self.truth.mean_reward(t, s, a)
        }
    }

    fn next(&self, t: usize, s: usize, a: usize) -> &[f64] {
        if self.keep[self.cell(t, s, a)] {
            self.empirical.p_hat(t, s, a)
        } else {
            self.truth.transition(t, s, a)
        }
    }
}

/// Tabular-MIS with the true transition and reward substituted at every
/// cell whose count falls below `n * d_t^mu(s, a) * (1 - theta)`. Not
/// computable from data alone; unbiased for the true value.
pub fn estimate_fictitious_tmis(data: &Dataset, pi: &Policy, config: &FictitiousConfig<'_>) -> Result<f64> {
    data.check_policy(pi)?;
    let mdp = config.mdp;
    if (mdp.horizon(), mdp.num_states(), mdp.num_actions()) != (data.horizon(), data.num_states(), data.num_actions()) {
        return Err(Error::config("fictitious config model does not match the dataset dimensions"));
    }
    let empirical = EmpiricalModel::from_dataset(data);
    let n = empirical.n() as f64;
    let (h, ns, na) = empirical.dims();
    let mut keep = Vec::with_capacity(h * ns * na);
    for t in 0..h {
        for s in 0..ns {
            for a in 0..na {
                let threshold = n * config.mu_marginals.state_action(t, s, a) * (1.0 - config.theta);
                keep.push(empirical.count_sa(t, s, a) as f64 >= threshold);
            }
        }
    }
    let initial = empirical.initial_hat();
    let model = FictitiousModel { empirical, truth: mdp, keep };
    Ok(forward_value(&model, &initial, pi, |_, _| {}))
}
