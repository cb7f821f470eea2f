//! Exact dynamic programming on a known model: value tables, marginal
//! visitation distributions and the coverage ratios that appear in the
//! error bounds.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Policy, TabularMdp};
use crate::{Error, Result};

/// A model that can be rolled forward: mean rewards and next-state laws per
/// `(t, s, a)`. Implemented by the true model and by the empirical models the
/// estimators build, so ground truth and plug-in estimates share one
/// recursion.
pub trait ForwardModel {
    fn dims(&self) -> (usize, usize, usize);
    fn reward(&self, t: usize, s: usize, a: usize) -> f64;
    /// Next-state vector at `t < H - 1`; may be all zeros for empirical rows
    /// that were never visited.
    fn next(&self, t: usize, s: usize, a: usize) -> &[f64];
}

impl ForwardModel for TabularMdp {
    fn dims(&self) -> (usize, usize, usize) {
        (self.horizon(), self.num_states(), self.num_actions())
    }

    fn reward(&self, t: usize, s: usize, a: usize) -> f64 {
        self.mean_reward(t, s, a)
    }

    fn next(&self, t: usize, s: usize, a: usize) -> &[f64] {
        self.transition(t, s, a)
    }
}

/// `sum_t <d_t, r_t^pi>` with `d_{t+1} = P_t^pi d_t`, starting from `initial`.
/// `visit` sees each state slice `d_t` before it is consumed.
pub(crate) fn forward_value<M: ForwardModel + ?Sized>(
    model: &M,
    initial: &[f64],
    pi: &Policy,
    mut visit: impl FnMut(usize, &[f64]),
) -> f64 {
    let (h, ns, na) = model.dims();
    let mut d = initial.to_vec();
    let mut next = vec![0.0; ns];
    let mut reward_pi = vec![0.0; ns];
    let mut value = 0.0;
    for t in 0..h {
        visit(t, &d);
        for (s, r) in reward_pi.iter_mut().enumerate() {
            *r = (0..na).map(|a| pi.prob(t, s, a) * model.reward(t, s, a)).sum();
        }
        value += d.iter().zip(&reward_pi).map(|(x, y)| x * y).sum::<f64>();
        if t + 1 < h {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (s, &ds) in d.iter().enumerate() {
                if ds == 0.0 {
                    continue;
                }
                for a in 0..na {
                    let w = ds * pi.prob(t, s, a);
                    if w == 0.0 {
                        continue;
                    }
                    for (acc, p) in next.iter_mut().zip(model.next(t, s, a)) {
                        *acc += w * p;
                    }
                }
            }
            core::mem::swap(&mut d, &mut next);
        }
    }
    value
}

/// Value and action-value tables of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// `[h][s]` for `h in 0..=H`; the last slice is the zero boundary.
    v: Vec<f64>,
    /// `[h][s][a]` for `h in 0..H`.
    q: Vec<f64>,
    /// `<d_1, V_1>`.
    pub policy_value: f64,
    /// `sum_t <d_t, r_t^pi>`, computed independently of the backward pass.
    pub forward_value: f64,
}

impl ValueTables {
    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    /// Slice `V_h(.)`; `h == H` gives the zero boundary.
    pub fn v_slice(&self, h: usize) -> &[f64] {
        &self.v[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Backward Bellman recursion `Q_h = r_h + P_h V_{h+1}`, `V_h = <pi_h, Q_h>`,
/// cross-checked against the forward marginal sum.
pub fn exact_value(mdp: &TabularMdp, pi: &Policy) -> Result<ValueTables> {
    mdp.check_policy(pi)?;
    let (h, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut v = vec![0.0; (h + 1) * ns];
    let mut q = vec![0.0; h * ns * na];
    for t in (0..h).rev() {
        let (head, tail) = v.split_at_mut((t + 1) * ns);
        let v_next = &tail[..ns];
        let v_t = &mut head[t * ns..];
        for s in 0..ns {
            let mut acc = 0.0;
            for a in 0..na {
                let mut qa = mdp.mean_reward(t, s, a);
                if t + 1 < h {
                    qa += mdp.transition(t, s, a).iter().zip(v_next).map(|(p, x)| p * x).sum::<f64>();
                }
                q[(t * ns + s) * na + a] = qa;
                acc += pi.prob(t, s, a) * qa;
            }
            v_t[s] = acc;
        }
    }
    let policy_value: f64 = mdp.initial().iter().zip(&v[..ns]).map(|(p, x)| p * x).sum();
    let forward = forward_value(mdp, mdp.initial(), pi, |_, _| {});
    debug_assert!(
        (policy_value - forward).abs() <= 1e-10 * (1.0 + policy_value.abs()),
        "backward {policy_value} vs forward {forward}"
    );
    Ok(ValueTables {
        num_states: ns,
        num_actions: na,
        horizon: h,
        v,
        q,
        policy_value,
        forward_value: forward,
    })
}

/// Per-step visitation distributions `d_t(s)` and `d_t(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDistributions {
    num_states: usize,
    num_actions: usize,
    state: Vec<f64>,
    state_action: Vec<f64>,
}

impl MarginalDistributions {
    #[inline]
    pub fn state(&self, t: usize, s: usize) -> f64 {
        self.state[t * self.num_states + s]
    }

    #[inline]
    pub fn state_action(&self, t: usize, s: usize, a: usize) -> f64 {
        self.state_action[(t * self.num_states + s) * self.num_actions + a]
    }

    pub fn state_slice(&self, t: usize) -> &[f64] {
        &self.state[t * self.num_states..(t + 1) * self.num_states]
    }

    pub fn horizon(&self) -> usize {
        self.state.len() / self.num_states
    }
}

/// Forward recursion `d_{t+1} = P_t^pi d_t` from the initial distribution.
pub fn marginal_distributions(mdp: &TabularMdp, pi: &Policy) -> Result<MarginalDistributions> {
    mdp.check_policy(pi)?;
    let (h, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut state = Vec::with_capacity(h * ns);
    forward_value(mdp, mdp.initial(), pi, |_, d| state.extend_from_slice(d));
    let mut state_action = Vec::with_capacity(h * ns * na);
    for t in 0..h {
        for s in 0..ns {
            let ds = state[t * ns + s];
            state_action.extend(pi.row(t, s).iter().map(|p| ds * p));
        }
    }
    Ok(MarginalDistributions { num_states: ns, num_actions: na, state, state_action })
}

/// Coverage constants of a (logging, target) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRatios {
    /// `max_{t,s} d_t^pi(s) / d_t^mu(s)`.
    pub tau_s: f64,
    /// `max_{t,s,a} pi(a|s) / mu(a|s)` over states the logger reaches.
    pub tau_a: f64,
    /// `min_{t,s} d_t^mu(s)` over states the logger reaches.
    pub d_m: f64,
    /// `min_{t,s,a} d_t^mu(s, a)` over pairs the logger reaches.
    pub d_m_sa: f64,
}

/// Computes the coverage constants using the relaxed convention: cells that
/// neither policy reaches are skipped, and a cell reached by `pi` but not by
/// `mu` is a [`Error::Coverage`].
pub fn diagnostic_ratios(mdp: &TabularMdp, mu: &Policy, pi: &Policy) -> Result<DiagnosticRatios> {
    let dm = marginal_distributions(mdp, mu)?;
    let dp = marginal_distributions(mdp, pi)?;
    ratios_from_marginals(mdp, mu, pi, &dm, &dp)
}

pub(crate) fn ratios_from_marginals(
    mdp: &TabularMdp,
    mu: &Policy,
    pi: &Policy,
    dm: &MarginalDistributions,
    dp: &MarginalDistributions,
) -> Result<DiagnosticRatios> {
    let (h, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut out = DiagnosticRatios {
        tau_s: 0.0,
        tau_a: 0.0,
        d_m: f64::INFINITY,
        d_m_sa: f64::INFINITY,
    };
    for t in 0..h {
        for s in 0..ns {
            let (m, p) = (dm.state(t, s), dp.state(t, s));
            if m == 0.0 {
                if p > 0.0 {
                    return Err(Error::Coverage { t, state: s, action: None });
                }
                continue;
            }
            out.tau_s = out.tau_s.max(p / m);
            out.d_m = out.d_m.min(m);
            for a in 0..na {
                let (ma, pa) = (mu.prob(t, s, a), pi.prob(t, s, a));
                if ma == 0.0 {
                    if pa > 0.0 && p > 0.0 {
                        return Err(Error::Coverage { t, state: s, action: Some(a) });
                    }
                    continue;
                }
                out.tau_a = out.tau_a.max(pa / ma);
                out.d_m_sa = out.d_m_sa.min(dm.state_action(t, s, a));
            }
        }
    }
    Ok(out)
}
