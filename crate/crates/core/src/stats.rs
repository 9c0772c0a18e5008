//! Small statistics toolkit shared by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Every statistical threshold used by checks and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Multiplier for "within k standard errors" comparisons.
    pub sigma_k: f64,
    /// Allowed relative deviation of the CLT variance ratio from 1.
    pub variance_band: f64,
    /// Largest acceptable |skewness| of the CLT statistic.
    pub skewness_max: f64,
    /// Accepted interval for wl_drift / t_drift.
    pub wl_ratio_low: f64,
    pub wl_ratio_high: f64,
    /// Relative-change stopping rule of the doubling horizon schedule.
    pub horizon_tolerance: f64,
    /// Degenerate-regime upper bracket for ξ(t⁻¹a).
    pub xi_zero_bracket: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sigma_k: 3.0,
            variance_band: 0.15,
            skewness_max: 0.15,
            wl_ratio_low: 1.9,
            wl_ratio_high: 2.1,
            horizon_tolerance: 1e-3,
            xi_zero_bracket: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: u64,
    pub method: String,
}

impl EstimateWithCI {
    pub fn new(point: f64, std_error: f64, n_samples: u64, method: &str) -> Self {
        let se = if std_error.is_finite() { std_error.max(0.0) } else { std_error };
        Self {
            point,
            std_error: se,
            ci_low: point - Z95 * se,
            ci_high: point + Z95 * se,
            n_samples,
            method: method.to_string(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn excludes_zero(&self) -> bool {
        !self.contains(0.0)
    }

    pub fn half_width(&self) -> f64 {
        Z95 * self.std_error
    }

    /// |a − b| ≤ k·√(se_a² + se_b²).
    pub fn agrees_with(&self, other: &EstimateWithCI, k: f64) -> bool {
        (self.point - other.point).abs() <= k * self.std_error.hypot(other.std_error)
    }

    /// |point − x| ≤ k·se.
    pub fn within(&self, x: f64, k: f64) -> bool {
        (self.point - x).abs() <= k * self.std_error
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(c * self.point, c.abs() * self.std_error, self.n_samples, &self.method)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean with its standard error.
pub fn mean_estimate(xs: &[f64], method: &str) -> EstimateWithCI {
    let n = xs.len();
    let se = if n > 1 { (variance(xs) / n as f64).sqrt() } else { 0.0 };
    EstimateWithCI::new(mean(xs), se, n as u64, method)
}

/// ΣY / ΣX with the delta-method standard error
/// se² = Σ(Yᵢ − R·Xᵢ)² / (m(m−1) X̄²).
pub fn ratio_estimate(ys: &[f64], xs: &[f64], method: &str) -> EstimateWithCI {
    assert_eq!(ys.len(), xs.len());
    let m = ys.len();
    let sy: f64 = ys.iter().sum();
    let sx: f64 = xs.iter().sum();
    let r = sy / sx;
    let se = if m > 1 {
        let xbar = sx / m as f64;
        let ss: f64 = ys.iter().zip(xs).map(|(y, x)| (y - r * x).powi(2)).sum();
        (ss / (m as f64 * (m - 1) as f64)).sqrt() / xbar
    } else {
        0.0
    };
    EstimateWithCI::new(r, se, m as u64, method)
}

/// Ratio estimate for a single dependent sequence, using contiguous batches
/// as clusters.
pub fn batch_ratio_estimate(ys: &[f64], xs: &[f64], batches: usize, method: &str) -> EstimateWithCI {
    let n = ys.len();
    let b = batches.min(n).max(1);
    let mut by = Vec::with_capacity(b);
    let mut bx = Vec::with_capacity(b);
    for i in 0..b {
        let (lo, hi) = (i * n / b, (i + 1) * n / b);
        by.push(ys[lo..hi].iter().sum());
        bx.push(xs[lo..hi].iter().sum());
    }
    let mut est = ratio_estimate(&by, &bx, method);
    est.n_samples = n as u64;
    est
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Kolmogorov–Smirnov distance between the sample and N(mu, sd²).
pub fn ks_normal(xs: &[f64], mu: f64, sd: f64) -> f64 {
    let Ok(dist) = Normal::new(mu, sd) else {
        return f64::NAN;
    };
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Lag-1 sample autocorrelation.
pub fn lag1_correlation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return f64::NAN;
    }
    let m = mean(xs);
    let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_identical_pairs_has_zero_error() {
        let e = ratio_estimate(&[3.0; 10], &[2.0; 10], "r");
        assert_eq!(e.point, 1.5);
        assert_eq!(e.std_error, 0.0);
        assert!(e.ci_low <= e.point && e.point <= e.ci_high);
    }

    #[test]
    fn ratio_se_matches_a_simulated_spread() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut points = Vec::new();
        let mut ses = Vec::new();
        for _ in 0..400 {
            let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(1.0..5.0)).collect();
            let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + rng.gen_range(-1.0..1.0)).collect();
            let e = ratio_estimate(&ys, &xs, "r");
            points.push(e.point);
            ses.push(e.std_error);
        }
        let spread = variance(&points).sqrt();
        let typical = mean(&ses);
        assert!((spread / typical - 1.0).abs() < 0.15, "{spread} vs {typical}");
    }

    #[test]
    fn moments_of_symmetric_data() {
        let xs: Vec<f64> = (-50..=50).map(f64::from).collect();
        assert!(skewness(&xs).abs() < 1e-12);
        // uniform: excess kurtosis close to -1.2
        assert!((excess_kurtosis(&xs) + 1.2).abs() < 0.01);
    }

    #[test]
    fn ks_against_normal_quantiles() {
        let n = Normal::new(0.0, 2.0).unwrap();
        let xs: Vec<f64> = (1..1000).map(|i| n.inverse_cdf(i as f64 / 1000.0)).collect();
        assert!(ks_normal(&xs, 0.0, 2.0) < 0.002);
        assert!(ks_normal(&xs, 1.0, 2.0) > 0.15);
    }

    #[test]
    fn agreement_and_scaling() {
        let a = EstimateWithCI::new(1.0, 0.1, 10, "a");
        let b = EstimateWithCI::new(1.3, 0.1, 10, "b");
        assert!(a.agrees_with(&b, 3.0));
        assert!(!a.agrees_with(&b, 2.0));
        let c = a.scaled(2.5);
        assert_eq!(c.point, 2.5);
        assert_eq!(c.std_error, 0.25);
    }
}
