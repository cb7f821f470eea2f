//! Small numeric helpers with a fixed evaluation order.

/// Pairwise (cascade) summation in index order. The association tree
/// depends only on `xs.len()`, so the result is bitwise reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Arithmetic mean via [`pairwise_sum`]; NaN for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Root mean squared error of `estimates` against `truth`.
pub fn rmse(estimates: &[f64], truth: f64) -> f64 {
    let sq: alloc::vec::Vec<f64> = estimates.iter().map(|v| (v - truth) * (v - truth)).collect();
    libm::sqrt(mean(&sq))
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: alloc::vec::Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() as f64 - 1.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|&x| libm::log(x)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|&y| libm::log(y)).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_of_symmetric_pair() {
        assert_eq!(rmse(&[1.0, 3.0], 2.0), 1.0);
        assert_eq!(rmse(&[5.0], 5.0), 0.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: std::vec::Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: std::vec::Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(sample_variance(&[1.0, 2.0, 3.0]), 1.0);
    }
}
