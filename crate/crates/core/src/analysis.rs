//! Closed-form variance quantities of a known model and policy pair.
//!
//! All sums run over `t = 0..=H` in the convention where the `t = 0` term is
//! the variance of `V_1(s_1)` under the initial distribution, and every
//! other term is a weighted conditional variance
//! `sigma_t^2(s, a) = Var[V_{t+1}(s') + r_t | s_t = s, a_t = a]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{exact_value, marginal_distributions, ratios_from_marginals, DiagnosticRatios, MarginalDistributions, ValueTables};
use crate::model::{Policy, TabularMdp};
use crate::Result;

/// Variance of `V_{t+1}(s') + r_t` given `(s, a)` at step `t`.
pub fn conditional_variance(mdp: &TabularMdp, values: &ValueTables, t: usize, s: usize, a: usize) -> f64 {
    let mut var = mdp.reward_variance(t, s, a);
    if t + 1 < mdp.horizon() {
        let p = mdp.transition(t, s, a);
        let next = values.v_slice(t + 1);
        let m: f64 = p.iter().zip(next).map(|(p, v)| p * v).sum();
        var += p.iter().zip(next).map(|(p, v)| p * (v - m) * (v - m)).sum::<f64>();
    }
    var
}

fn weighted_variance(weights: &[f64], xs: &[f64]) -> f64 {
    let m: f64 = weights.iter().zip(xs).map(|(w, x)| w * x).sum();
    weights.iter().zip(xs).map(|(w, x)| w * (x - m) * (x - m)).sum()
}

struct Pieces {
    d_mu: MarginalDistributions,
    d_pi: MarginalDistributions,
    ratios: DiagnosticRatios,
    /// Per-step cr-bound terms, `t = 0..=H`.
    crlb_terms: Vec<f64>,
    /// Per-step excess of the State-MIS asymptotic MSE over the cr-bound.
    smis_excess: Vec<f64>,
}

fn pieces(mdp: &TabularMdp, mu: &Policy, pi: &Policy) -> Result<Pieces> {
    let values = exact_value(mdp, pi)?;
    let d_mu = marginal_distributions(mdp, mu)?;
    let d_pi = marginal_distributions(mdp, pi)?;
    let ratios = ratios_from_marginals(mdp, mu, pi, &d_mu, &d_pi)?;
    let (h, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());

    let mut crlb_terms = vec![0.0; h + 1];
    let mut smis_excess = vec![0.0; h + 1];
    crlb_terms[0] = weighted_variance(mdp.initial(), values.v_slice(0));

    for t in 0..h {
        let (mut crlb, mut excess) = (0.0, 0.0);
        for s in 0..ns {
            let (dm, dp) = (d_mu.state(t, s), d_pi.state(t, s));
            if dm == 0.0 || dp == 0.0 {
                continue;
            }
            let w = dp * dp / dm;
            // sum_a pi^2/mu sigma^2, and Var_{a ~ mu}[rho Q] = sum_a pi^2/mu Q^2 - (sum_a pi Q)^2
            let (mut inner, mut second, mut first) = (0.0, 0.0, 0.0);
            for a in 0..na {
                let (m, p) = (mu.prob(t, s, a), pi.prob(t, s, a));
                if m == 0.0 || p == 0.0 {
                    continue;
                }
                let q = values.q(t, s, a);
                inner += p * p / m * conditional_variance(mdp, &values, t, s, a);
                second += p * p / m * q * q;
                first += p * q;
            }
            crlb += w * inner;
            excess += w * (second - first * first).max(0.0);
        }
        crlb_terms[t + 1] = crlb;
        smis_excess[t + 1] = excess;
    }
    Ok(Pieces { d_mu, d_pi, ratios, crlb_terms, smis_excess })
}

/// Asymptotic `n * MSE` floor: `sum_t E_mu[(d^pi(s,a)/d^mu(s,a))^2 sigma_t^2(s,a)]`.
pub fn cr_lower_bound(mdp: &TabularMdp, mu: &Policy, pi: &Policy) -> Result<f64> {
    Ok(pieces(mdp, mu, pi)?.crlb_terms.iter().sum())
}

/// Asymptotic `n * MSE` of State-MIS:
/// `sum_t E_mu[(d^pi(s)/d^mu(s))^2 Var[rho (V_{t+1} + r) | s]]`, expanded as
/// the cr-bound plus the nonnegative `Var_{a ~ mu}[rho Q_t(s, a)]` excess.
pub fn smis_asymptotic_mse(mdp: &TabularMdp, mu: &Policy, pi: &Policy) -> Result<f64> {
    let p = pieces(mdp, mu, pi)?;
    Ok(p.crlb_terms.iter().zip(&p.smis_excess).map(|(c, e)| c + e).sum())
}

/// Finite-sample MSE bound of Tabular-MIS at `n` episodes, with its
/// asymptotic reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub n: u64,
    pub crlb_asymptotic: f64,
    pub smis_asymptotic: f64,
    /// `(crlb / n) * (1 + sqrt(16 ln n / (n d_m)))`.
    pub tmis_bound_leading: f64,
    /// `8 tau_a^2 tau_s H^3 R^2 / (n^2 d_m) + 3 H^3 S A R^2 / n^2`.
    pub tmis_bound_higher_order: f64,
    /// Cr-bound contribution of each step `t = 0..=H`.
    pub per_timestep_terms: Vec<f64>,
    /// Whether `n` meets the sample-size condition under which the bound holds.
    pub in_regime: bool,
    pub ratios: DiagnosticRatios,
}

impl VarianceReport {
    pub fn tmis_bound(&self) -> f64 {
        self.tmis_bound_leading + self.tmis_bound_higher_order
    }
}

pub fn tmis_mse_bound(mdp: &TabularMdp, mu: &Policy, pi: &Policy, n: u64) -> Result<VarianceReport> {
    if n == 0 {
        return Err(crate::Error::config("n must be at least 1"));
    }
    let p = pieces(mdp, mu, pi)?;
    let crlb: f64 = p.crlb_terms.iter().sum();
    let smis: f64 = p.crlb_terms.iter().zip(&p.smis_excess).map(|(c, e)| c + e).sum();
    let r = p.ratios;
    let nf = n as f64;
    let ln_n = libm::log(nf);
    let h = mdp.horizon() as f64;
    let r2 = mdp.reward_max() * mdp.reward_max();
    let leading = crlb / nf * (1.0 + libm::sqrt(16.0 * ln_n / (nf * r.d_m)));
    let higher = 8.0 * r.tau_a * r.tau_a * r.tau_s * h * h * h * r2 / (nf * nf * r.d_m)
        + 3.0 * h * h * h * (mdp.num_states() * mdp.num_actions()) as f64 * r2 / (nf * nf);

    let mut min_cover = f64::INFINITY;
    for t in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            let m = p.d_pi.state(t, s).max(p.d_mu.state(t, s));
            if m > 0.0 {
                min_cover = min_cover.min(m);
            }
        }
    }
    let in_regime = nf > 16.0 * ln_n / r.d_m_sa && nf > 4.0 * h * r.tau_a * r.tau_s / min_cover;
    Ok(VarianceReport {
        n,
        crlb_asymptotic: crlb,
        smis_asymptotic: smis,
        tmis_bound_leading: leading,
        tmis_bound_higher_order: higher,
        per_timestep_terms: p.crlb_terms,
        in_regime,
        ratios: r,
    })
}

/// Exact variance of the return and its step-by-step total-variance split.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceDecomposition {
    /// `Var_pi[sum_t r_t]`, from a second-moment recursion.
    pub direct_variance: f64,
    /// `Var[V_1(s_1)]` over the initial distribution.
    pub initial_term: f64,
    /// `E_pi[Var[r_t + V_{t+1}(s_{t+1}) | s_t, a_t]]` per step.
    pub conditional_terms: Vec<f64>,
    /// `E_pi[Var[Q_t(s_t, a_t) | s_t]]` per step.
    pub action_terms: Vec<f64>,
    /// `sum_t conditional_terms[t]`.
    pub conditional_sum: f64,
    /// Whether `conditional_sum <= H^2 R_max^2`.
    pub within_h2_bound: bool,
}

impl VarianceDecomposition {
    /// Initial term plus all per-step terms; equals `direct_variance`.
    pub fn term_sum(&self) -> f64 {
        self.initial_term + self.conditional_terms.iter().sum::<f64>() + self.action_terms.iter().sum::<f64>()
    }
}

pub fn total_variance_decomposition(mdp: &TabularMdp, pi: &Policy) -> Result<VarianceDecomposition> {
    let values = exact_value(mdp, pi)?;
    let d_pi = marginal_distributions(mdp, pi)?;
    let (h, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());

    // W_t(s) = E[(sum_{k >= t} r_k)^2 | s_t = s]
    let mut w_next = vec![0.0; ns];
    let mut w = vec![0.0; ns];
    for t in (0..h).rev() {
        for (s, ws) in w.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..na {
                let p = pi.prob(t, s, a);
                if p == 0.0 {
                    continue;
                }
                let r = mdp.mean_reward(t, s, a);
                let mut m2 = mdp.reward_variance(t, s, a) + r * r;
                if t + 1 < h {
                    let row = mdp.transition(t, s, a);
                    let ev: f64 = row.iter().zip(values.v_slice(t + 1)).map(|(p, v)| p * v).sum();
                    let ew: f64 = row.iter().zip(&w_next).map(|(p, x)| p * x).sum();
                    m2 += 2.0 * r * ev + ew;
                }
                acc += p * m2;
            }
            *ws = acc;
        }
        core::mem::swap(&mut w, &mut w_next);
    }
    let second_moment: f64 = mdp.initial().iter().zip(&w_next).map(|(p, x)| p * x).sum();
    let direct_variance = second_moment - values.policy_value * values.policy_value;

    let initial_term = weighted_variance(mdp.initial(), values.v_slice(0));
    let mut conditional_terms = vec![0.0; h];
    let mut action_terms = vec![0.0; h];
    let mut q = vec![0.0; na];
    for t in 0..h {
        for s in 0..ns {
            let ds = d_pi.state(t, s);
            if ds == 0.0 {
                continue;
            }
            for (a, qa) in q.iter_mut().enumerate() {
                *qa = values.q(t, s, a);
                conditional_terms[t] += d_pi.state_action(t, s, a) * conditional_variance(mdp, &values, t, s, a);
            }
            action_terms[t] += ds * weighted_variance(pi.row(t, s), &q);
        }
    }
    let conditional_sum: f64 = conditional_terms.iter().sum();
    let bound = (h as f64) * (h as f64) * mdp.reward_max() * mdp.reward_max();
    Ok(VarianceDecomposition {
        direct_variance,
        initial_term,
        conditional_terms,
        action_terms,
        conditional_sum,
        within_h2_bound: conditional_sum <= bound,
    })
}
