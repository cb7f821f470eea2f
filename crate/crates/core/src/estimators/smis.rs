use alloc::vec;

use super::is::{check_pair, step_ratio};
use crate::model::{Dataset, Policy};
use crate::Result;

/// State-MIS. Transitions and rewards are estimated at the state level with
/// explicit single-step importance weights:
///
/// - `P_hat^pi_{t+1}(s'|s) = (1/n_{s_t}) sum_i rho_t^(i) 1(s_t^(i) = s, s_{t+1}^(i) = s')`
/// - `r_hat^pi_t(s) = (1/n_{s_t}) sum_i rho_t^(i) r_t^(i) 1(s_t^(i) = s)`
///
/// with `rho_t = pi(a_t|s_t) / mu(a_t|s_t)`. States never visited at `t` get
/// zero rows. The value is `sum_t <d_hat_t^pi, r_hat_t^pi>`.
pub fn estimate_smis(data: &Dataset, mu: &Policy, pi: &Policy) -> Result<f64> {
    check_pair(data, mu, pi)?;
    let (h, ns) = (data.horizon(), data.num_states());
    let n = data.len() as f64;

    let mut counts = vec![0u64; h * ns];
    let mut reward_sum = vec![0.0; h * ns];
    let mut trans_sum = vec![0.0; h.saturating_sub(1) * ns * ns];
    for ep in data.episodes() {
        for (t, st) in ep.steps.iter().enumerate() {
            let s = st.state as usize;
            let rho = step_ratio(mu, pi, t, s, st.action as usize)?;
            counts[t * ns + s] += 1;
            reward_sum[t * ns + s] += rho * st.reward;
            if t + 1 < h {
                trans_sum[(t * ns + s) * ns + ep.steps[t + 1].state as usize] += rho;
            }
        }
    }

    let mut d: alloc::vec::Vec<f64> = counts[..ns].iter().map(|&c| c as f64 / n).collect();
    let mut next = vec![0.0; ns];
    let mut value = 0.0;
    for t in 0..h {
        for s in 0..ns {
            let c = counts[t * ns + s];
            if c > 0 {
                value += d[s] * reward_sum[t * ns + s] / c as f64;
            }
        }
        if t + 1 < h {
            next.iter_mut().for_each(|x| *x = 0.0);
            for s in 0..ns {
                let c = counts[t * ns + s];
                if c == 0 || d[s] == 0.0 {
                    continue;
                }
                let w = d[s] / c as f64;
                let row = &trans_sum[(t * ns + s) * ns..(t * ns + s + 1) * ns];
                for (acc, x) in next.iter_mut().zip(row) {
                    *acc += w * x;
                }
            }
            core::mem::swap(&mut d, &mut next);
        }
    }
    Ok(value)
}
