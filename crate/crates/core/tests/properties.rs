mod common;

use common::{noise_of, random_instance};
use proptest::prelude::*;
use tmis_core::analysis::{cr_lower_bound, smis_asymptotic_mse, tmis_mse_bound};
use tmis_core::dp::{exact_value, marginal_distributions};
use tmis_core::estimators::{
    estimate_is, estimate_split_tmis, estimate_tmis, estimate_tmis_with_diagnostics, EmpiricalModel, SplitConfig,
};
use tmis_core::generate::{random_deterministic_mdp, random_policy};
use tmis_core::rng;
use tmis_core::sample::sample_dataset;

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=3, 1usize..=6)
}

proptest! {
    #[test]
    fn tmis_is_bounded_with_substochastic_marginals(
        seed in any::<u64>(), (s, a, h) in dims(), n in 1usize..40, bern in any::<bool>()
    ) {
        let (mdp, mu, pi) = random_instance(seed, s, a, h, noise_of(bern));
        let data = sample_dataset(&mdp, &mu, n, seed.wrapping_add(1)).unwrap();
        let v = estimate_tmis(&data, &pi).unwrap();
        prop_assert!(v >= 0.0 && v <= h as f64 * mdp.reward_max() + 1e-12, "{v}");
        let (_, diag) = estimate_tmis_with_diagnostics(&data, &pi).unwrap();
        prop_assert_eq!(diag.zero_mass_states.len(), h);
        for w in diag.state_mass.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(diag.state_mass[0] <= 1.0 + 1e-12);
    }

    #[test]
    fn split_with_one_fold_is_tmis(seed in any::<u64>(), (s, a, h) in dims(), n in 1usize..40) {
        let (mdp, mu, pi) = random_instance(seed, s, a, h, noise_of(true));
        let data = sample_dataset(&mdp, &mu, n, seed).unwrap();
        let t = estimate_tmis(&data, &pi).unwrap();
        let st = estimate_split_tmis(&data, &pi, SplitConfig::Folds(1)).unwrap();
        prop_assert_eq!(t.to_bits(), st.to_bits());
    }

    #[test]
    fn smis_asymptote_dominates_crlb(seed in any::<u64>(), (s, a, h) in dims(), bern in any::<bool>()) {
        let (mdp, mu, pi) = random_instance(seed, s, a, h, noise_of(bern));
        let crlb = cr_lower_bound(&mdp, &mu, &pi).unwrap();
        let smis = smis_asymptotic_mse(&mdp, &mu, &pi).unwrap();
        prop_assert!(crlb >= 0.0);
        prop_assert!(smis >= crlb, "{smis} < {crlb}");
    }

    #[test]
    fn deterministic_models_are_recovered_exactly(seed in any::<u64>(), (s, a, h) in dims()) {
        let mut r = rng::stream(seed);
        let mdp = random_deterministic_mdp(s, a, h, &mut r);
        let mu = random_policy(h, s, a, 0.5, &mut r);
        let pi = random_policy(h, s, a, 0.0, &mut r);
        let data = sample_dataset(&mdp, &mu, 300, seed).unwrap();
        let model = EmpiricalModel::from_dataset(&data);
        let d_pi = marginal_distributions(&mdp, &pi).unwrap();
        let covered = (0..h).all(|t| (0..s).all(|x| (0..a).all(|y| {
            d_pi.state_action(t, x, y) == 0.0 || model.count_sa(t, x, y) > 0
        })));
        prop_assume!(covered);
        let v = estimate_tmis(&data, &pi).unwrap();
        let truth = exact_value(&mdp, &pi).unwrap().policy_value;
        prop_assert!((v - truth).abs() <= 1e-12, "{v} vs {truth}");
    }

    #[test]
    fn on_policy_is_is_the_mean_return(seed in any::<u64>(), (s, a, h) in dims(), n in 1usize..30) {
        let (mdp, mu, _) = random_instance(seed, s, a, h, noise_of(true));
        let data = sample_dataset(&mdp, &mu, n, seed).unwrap();
        let returns: Vec<f64> = data.episodes().iter().map(|e| e.total_reward()).collect();
        let v = estimate_is(&data, &mu, &mu).unwrap();
        prop_assert_eq!(v, tmis_core::stats::mean(&returns));
    }

    #[test]
    fn analysis_is_bitwise_repeatable(seed in any::<u64>(), (s, a, h) in dims(), n in 1u64..100_000) {
        let (mdp, mu, pi) = random_instance(seed, s, a, h, noise_of(true));
        let one = tmis_mse_bound(&mdp, &mu, &pi, n).unwrap();
        let two = tmis_mse_bound(&mdp, &mu, &pi, n).unwrap();
        prop_assert_eq!(one, two);
        let d1 = sample_dataset(&mdp, &mu, 5, seed).unwrap();
        let d2 = sample_dataset(&mdp, &mu, 5, seed).unwrap();
        prop_assert_eq!(d1, d2);
    }
}

#[test]
fn leading_term_multiplier_identity() {
    let (mdp, mu, pi) = random_instance(3, 2, 2, 4, noise_of(true));
    let crlb = cr_lower_bound(&mdp, &mu, &pi).unwrap();
    for n in [100u64, 10_000, 1_000_000] {
        let rep = tmis_mse_bound(&mdp, &mu, &pi, n).unwrap();
        let nf = n as f64;
        let multiplier = 1.0 + (16.0 * nf.ln() / (nf * rep.ratios.d_m)).sqrt();
        let ratio = nf * rep.tmis_bound_leading / crlb;
        assert!((ratio - multiplier).abs() < 1e-12, "n = {n}: {ratio} vs {multiplier}");
    }
}

#[test]
fn leading_term_tends_to_crlb() {
    // The multiplier decays like sqrt(ln n / n); at n = 10^9 it is within 1%.
    let (mdp, mu, pi) = random_instance(4, 2, 2, 4, noise_of(false));
    let crlb = cr_lower_bound(&mdp, &mu, &pi).unwrap();
    let rep = tmis_mse_bound(&mdp, &mu, &pi, 1_000_000_000).unwrap();
    let ratio = 1e9 * rep.tmis_bound_leading / crlb;
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    let rep6 = tmis_mse_bound(&mdp, &mu, &pi, 1_000_000).unwrap();
    assert!(1e6 * rep6.tmis_bound_leading / crlb > ratio);
}

#[test]
fn single_action_smis_equals_crlb() {
    let (mdp, mu, _) = random_instance(5, 3, 1, 5, noise_of(true));
    let crlb = cr_lower_bound(&mdp, &mu, &mu).unwrap();
    let smis = smis_asymptotic_mse(&mdp, &mu, &mu).unwrap();
    assert!((crlb - smis).abs() <= 1e-12 * crlb.max(1.0));
}
