//! Small estimators shared by the Monte Carlo experiments.

use serde::Serialize;

use crate::error::{Error, Result};

/// Mean, sample variance and standard error of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
}

/// Welford accumulation; `variance` uses the `n − 1` denominator.
pub fn summarize(xs: &[f64]) -> Result<Summary> {
    if xs.len() < 2 {
        return Err(Error::Statistics(format!("need at least 2 samples, got {}", xs.len())));
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = xs.len();
    let variance = m2 / (n - 1) as f64;
    Ok(Summary { n, mean, variance, se: (variance / n as f64).sqrt() })
}

/// Standard error of the sample variance, from the fourth central moment:
/// `Var(s²) ≈ (μ₄ − σ⁴ (n−3)/(n−1)) / n`.
pub fn variance_se(xs: &[f64]) -> Result<f64> {
    let s = summarize(xs)?;
    let n = xs.len() as f64;
    let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n;
    let v = (m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n;
    Ok(v.max(0.0).sqrt())
}

/// A binomial proportion with its Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Proportion {
    /// Normal-approximation standard error `√(p̂(1−p̂)/n)`.
    pub fn se(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }
}

/// Wilson interval at `z` standard deviations (1.96 for 95%).
pub fn wilson(successes: u64, n: u64, z: f64) -> Proportion {
    if n == 0 {
        return Proportion { successes, n, p_hat: f64::NAN, ci_lo: 0.0, ci_hi: 1.0 };
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Proportion {
        successes,
        n,
        p_hat: p,
        ci_lo: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        ci_hi: if successes == n { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// Ordinary least squares `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Statistics("x and y lengths differ".into()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Statistics(format!("need at least 3 points for a fit, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Statistics("degenerate x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit { intercept, slope, slope_se, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_small_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(summarize(&[1.0]).is_err());
    }

    #[test]
    fn wilson_brackets_estimate() {
        let p = wilson(30, 100, 1.96);
        assert!(p.ci_lo < 0.3 && 0.3 < p.ci_hi);
        let all = wilson(100, 100, 1.96);
        assert_eq!(all.ci_hi, 1.0);
        assert!(all.ci_lo > 0.95);
        let none = wilson(0, 100, 1.96);
        assert_eq!(none.ci_lo, 0.0);
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
    }
}
