//! Small sample statistics: summaries and the two-sample Kolmogorov-Smirnov test.

use serde::{Deserialize, Serialize};

use crate::scalar::{kahan_sum, Real};

/// Mean, spread and quantiles of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator; 0 for a single value).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// `(probability, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
}

pub const DEFAULT_PROBS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Linear-interpolation quantile (type 7) of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize<T: Real>(values: &[T]) -> Summary {
    let mut v: Vec<f64> = values.iter().map(|x| x.to_f64_lossy()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = kahan_sum(v.iter().copied()) / n as f64;
    let sd = if n > 1 { (kahan_sum(v.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64).sqrt() } else { 0.0 };
    Summary {
        n,
        mean,
        sd,
        min: v[0],
        max: v[n - 1],
        quantiles: DEFAULT_PROBS.iter().map(|&p| (p, quantile_sorted(&v, p))).collect(),
    }
}

/// Two-sample KS result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// `sup |F_a - F_b|` over the pooled sample, with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs two non-empty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsTest { statistic: d, p_value: kolmogorov_q(lambda) }
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_sample() {
        let s = summarize(&[4.0f64, 1.0, 3.0, 2.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(summarize(&[7.0f64]).sd, 0.0);
    }

    #[test]
    fn ks_statistic_known_values() {
        let t = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(t.statistic, 0.0);
        assert!(t.p_value > 0.99);
        let t = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(t.statistic, 1.0);
        let t = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]);
        assert!((t.statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_distribution_values() {
        // Reference values of the limiting Kolmogorov distribution.
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
        assert!((kolmogorov_q(0.5) - 0.9639).abs() < 5e-4);
    }
}
