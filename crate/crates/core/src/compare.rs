//! Empirical-versus-analytic CDF comparison.
//!
//! Delays are slot counts, so both CDFs are step functions that only jump
//! at integers; the Kolmogorov-Smirnov distance is the maximum absolute
//! difference over the integer support.

use crate::delay::PhaseTypeRep;
use crate::Result;
use serde::Serialize;

/// Empirical CDF of integer samples on 0..=u_max.
pub fn empirical_cdf(samples: &[u64], u_max: u64) -> Vec<f64> {
    let mut counts = vec![0u64; u_max as usize + 1];
    for &s in samples {
        counts[s.min(u_max) as usize] += 1;
    }
    let total = samples.len() as f64;
    let mut acc = 0u64;
    counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc as f64 / total
        })
        .collect()
}

/// Maximum absolute difference between two CDF tables on the same support.
pub fn ks_between(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// KS distance between delay samples and the analytic law.
///
/// Both CDFs are evaluated on 0..=max(sample); beyond the largest sample
/// the empirical CDF is 1 and the difference only shrinks.
pub fn ks_distance(samples: &[u64], rep: &PhaseTypeRep) -> f64 {
    assert!(!samples.is_empty());
    let u_max = *samples.iter().max().unwrap();
    let emp = empirical_cdf(samples, u_max);
    let ana = rep.cdf_table(u_max);
    ks_between(&emp, &ana)
}

/// Result bundle for one empirical-versus-analytic comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub ks_distance: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    pub analytic_mean: f64,
    pub analytic_variance: f64,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub mean_delta: f64,
    pub variance_delta: f64,
}

/// Compares samples against the analytic law at the given KS threshold.
pub fn compare(samples: &[u64], rep: &PhaseTypeRep, threshold: f64) -> Result<Comparison> {
    let ks = ks_distance(samples, rep);
    let analytic_mean = rep.mean()?;
    let analytic_variance = rep.variance()?;
    let k = samples.len() as f64;
    let empirical_mean = samples.iter().map(|&d| d as f64).sum::<f64>() / k;
    let empirical_variance = if samples.len() > 1 {
        samples
            .iter()
            .map(|&d| (d as f64 - empirical_mean).powi(2))
            .sum::<f64>()
            / (k - 1.0)
    } else {
        0.0
    };
    Ok(Comparison {
        ks_distance: ks,
        threshold,
        pass: ks <= threshold,
        samples: samples.len(),
        analytic_mean,
        analytic_variance,
        empirical_mean,
        empirical_variance,
        mean_delta: empirical_mean - analytic_mean,
        variance_delta: empirical_variance - analytic_variance,
    })
}
