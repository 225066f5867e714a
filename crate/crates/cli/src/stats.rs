use statrs::distribution::{Beta, ContinuousCDF};

/// One-sided Clopper–Pearson lower bound for a binomial proportion at
/// confidence `level`.
pub fn clopper_pearson_lower(k: u64, n: u64, level: f64) -> f64 {
    if k == 0 || n == 0 {
        return 0.0;
    }
    let beta = Beta::new(k as f64, (n - k + 1) as f64).expect("positive shape parameters");
    beta.inverse_cdf(1.0 - level)
}

/// Nearest-rank percentile of `values` (`q` in `[0, 1]`).
pub fn percentile(values: &[u64], q: f64) -> u64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Mean and standard error.
pub fn mean_se(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut q) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        s += x;
        q += x * x;
    }
    let mean = s / n;
    let var = if n > 1.0 { ((q - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Binomial, DiscreteCDF};

    #[test]
    fn clopper_pearson_matches_binomial_tail() {
        for (k, n) in [(1u64, 1000u64), (7, 1000), (50, 200)] {
            let lo = clopper_pearson_lower(k, n, 0.99);
            // at the bound, P[X ≥ k] equals 1 − level
            let tail = 1.0 - Binomial::new(lo, n).unwrap().cdf(k - 1);
            assert!((tail - 0.01).abs() < 1e-6, "{k}/{n}: {tail}");
            assert!(lo > 0.0 && lo < k as f64 / n as f64);
        }
        assert_eq!(clopper_pearson_lower(0, 1000, 0.99), 0.0);
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&v, 0.99), 99);
        assert_eq!(percentile(&v, 1.0), 100);
        assert_eq!(percentile(&[5], 0.5), 5);
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
