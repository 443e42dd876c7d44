//! Network configuration and the per-slot contact probabilities.
//!
//! A node's chance to transmit in a slot is governed by the cell-partitioned
//! torus, IID mobility, the equivalent-class MAC and the PD-f dispatch coin.
//! `contact_probabilities` collapses all of that into the three per-slot
//! outcome probabilities the queueing model is built on.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// All model parameters of a PD-f MANET instance.
///
/// `buffer` is the local-queue capacity in packets (the parameter written
/// `M` on the command line and in config files).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of mobile nodes.
    pub n: u32,
    /// Cells per torus side; the network is an m × m grid of unit area.
    pub m: u32,
    /// Guard factor Δ of the protocol interference model.
    #[serde(default)]
    pub delta: f64,
    /// Per-slot dispatch probability (0 < q < 1).
    pub q: f64,
    /// Per-slot packet-generating probability (0 ≤ λ < 1).
    pub lambda: f64,
    /// Dispatch limit: a head-of-line packet is removed after its f-th
    /// dispatch transmission (or after a source-destination transmission).
    pub f: u32,
    /// Local-queue buffer size in packets.
    #[serde(rename = "M")]
    pub buffer: u32,
}

impl NetworkConfig {
    /// Returns the config unchanged when every invariant holds, otherwise
    /// an error listing every violated bound.
    pub fn validate(&self) -> Result<Self> {
        let mut violations = Vec::new();
        if self.n < 2 {
            violations.push("n ≥ 2 required".to_string());
        }
        if self.m < 4 {
            violations.push("m ≥ 4 required".to_string());
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            violations.push("0 < q < 1 required".to_string());
        }
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            violations.push("0 ≤ λ < 1 required".to_string());
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            violations.push("Δ ≥ 0 required".to_string());
        }
        if self.f < 1 {
            violations.push("f ≥ 1 required".to_string());
        }
        if self.buffer < 1 {
            violations.push("M ≥ 1 required".to_string());
        }
        if violations.is_empty() {
            Ok(*self)
        } else {
            Err(Error::InvalidConfig(violations))
        }
    }

    /// Equivalent-class MAC parameter for this config.
    pub fn alpha(&self) -> u32 {
        compute_alpha(self.m, self.delta)
    }

    /// One-line summary used in output-file headers.
    pub fn header_line(&self) -> String {
        format!(
            "n={} m={} delta={} q={} lambda={} f={} M={} alpha={}",
            self.n,
            self.m,
            self.delta,
            self.q,
            self.lambda,
            self.f,
            self.buffer,
            self.alpha()
        )
    }
}

/// Per-slot transmission outcome probabilities for a backlogged node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactProbabilities {
    /// Probability of a source-destination transmission.
    pub p0: f64,
    /// Probability of a packet-dispatch transmission.
    pub p1: f64,
    /// Probability of neither.
    pub p2: f64,
    /// Equivalent-class partition parameter.
    pub alpha: u32,
}

/// Smallest equivalent-class spacing that keeps simultaneous transmitters
/// out of each other's guard zone: min{⌈(1+Δ)·√8 + 2⌉, m}.
///
/// The transmission range √8/m covers a 3 × 3 cell neighborhood; active
/// cells spaced α apart then leave at least (α−2)/m ≥ (1+Δ)·√8/m between a
/// receiver and any other transmitter.
pub fn compute_alpha(m: u32, delta: f64) -> u32 {
    let raw = (1.0 + delta) * 8.0_f64.sqrt() + 2.0;
    if raw >= m as f64 {
        m
    } else {
        (raw.ceil() as u32).min(m)
    }
}

/// Evaluates the per-slot contact probabilities for a valid config.
///
/// With IID placement the tagged node sits in an active cell with long-run
/// frequency 1/α²; the remaining factors average fair channel contention
/// against the other n−1 nodes jointly with the destination being inside /
/// outside the 9-cell range.
pub fn contact_probabilities(cfg: &NetworkConfig) -> Result<ContactProbabilities> {
    cfg.validate()?;
    let alpha = cfg.alpha();
    let a2 = (alpha as u64 * alpha as u64) as f64;
    let n = cfg.n as f64;
    let m2 = (cfg.m as u64 * cfg.m as u64) as f64;
    // ((m²−1)/m²)^(n−1) via exp/ln_1p so large n stays accurate.
    let pw = ((n - 1.0) * (-1.0 / m2).ln_1p()).exp();
    let pair = n * (n - 1.0);
    let p0 = ((9.0 * n - m2) / pair - pw * (8.0 * n + 1.0 - m2) / pair) / a2;
    let p1 = cfg.q * (m2 - 9.0) / (a2 * (n - 1.0)) * (1.0 - pw);
    // Mathematically nonnegative for n ≥ 2, m ≥ 4; clamp float dust only.
    let p0 = p0.max(0.0);
    let p1 = p1.max(0.0);
    let p2 = 1.0 - p0 - p1;
    debug_assert!(p2 >= -1e-12);
    Ok(ContactProbabilities {
        p0,
        p1,
        p2: p2.max(0.0),
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u32, m: u32, delta: f64, q: f64, lambda: f64, f: u32, buffer: u32) -> NetworkConfig {
        NetworkConfig {
            n,
            m,
            delta,
            q,
            lambda,
            f,
            buffer,
        }
    }

    #[test]
    fn alpha_examples() {
        // Δ=0: ⌈√8 + 2⌉ = ⌈4.828…⌉ = 5, capped by m where needed.
        assert_eq!(compute_alpha(16, 0.0), 5);
        assert_eq!(compute_alpha(8, 0.0), 5);
        assert_eq!(compute_alpha(4, 0.0), 4);
        // Δ=1: ⌈2√8 + 2⌉ = ⌈7.657…⌉ = 8.
        assert_eq!(compute_alpha(16, 1.0), 8);
        assert_eq!(compute_alpha(8, 1.0), 8);
        // Large Δ always caps at m.
        assert_eq!(compute_alpha(16, 100.0), 16);
    }

    #[test]
    fn alpha_nondecreasing_in_delta_and_capped() {
        for m in [4u32, 8, 16, 32] {
            let mut last = 0;
            for i in 0..60 {
                let a = compute_alpha(m, i as f64 * 0.25);
                assert!(a >= last);
                assert!((1..=m).contains(&a));
                last = a;
            }
        }
    }

    #[test]
    fn exact_rationals_small_config() {
        // n=2, m=4, Δ=0, q=1/2: p0 = 17/512, p1 = 7/512.
        let c = contact_probabilities(&cfg(2, 4, 0.0, 0.5, 0.0, 1, 1)).unwrap();
        assert_eq!(c.alpha, 4);
        assert!((c.p0 - 17.0 / 512.0).abs() < 1e-15);
        assert!((c.p1 - 7.0 / 512.0).abs() < 1e-15);
        assert!((c.p0 + c.p1 + c.p2 - 1.0).abs() < 1e-15);
    }

    /// Exact-rational evaluation of the two contact formulas for small n,
    /// independent of the floating-point path.
    fn rational_contact(
        n: i128,
        m: i128,
        q_num: i128,
        q_den: i128,
    ) -> ((i128, i128), (i128, i128)) {
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        fn reduce(n: i128, d: i128) -> (i128, i128) {
            let g = gcd(n, d).max(1);
            let s = if d < 0 { -1 } else { 1 };
            (s * n / g, s * d / g)
        }
        fn add((an, ad): (i128, i128), (bn, bd): (i128, i128)) -> (i128, i128) {
            reduce(an * bd + bn * ad, ad * bd)
        }
        fn mul((an, ad): (i128, i128), (bn, bd): (i128, i128)) -> (i128, i128) {
            reduce(an * bn, ad * bd)
        }
        let alpha = compute_alpha(m as u32, 0.0) as i128;
        let m2 = m * m;
        // pw = ((m²−1)/m²)^(n−1)
        let mut pw = (1, 1);
        for _ in 0..(n - 1) {
            pw = mul(pw, (m2 - 1, m2));
        }
        let pair = n * (n - 1);
        let p0 = mul(
            (1, alpha * alpha),
            add((9 * n - m2, pair), mul((-(8 * n + 1 - m2), pair), pw)),
        );
        let p1 = mul(
            mul((q_num, q_den), (m2 - 9, alpha * alpha * (n - 1))),
            add((1, 1), mul((-1, 1), pw)),
        );
        (p0, p1)
    }

    #[test]
    fn rational_oracle_matches_float_path() {
        for (n, m, qn, qd) in [
            (2u32, 4u32, 1i128, 2i128),
            (3, 4, 1, 4),
            (2, 5, 1, 2),
            (3, 5, 3, 4),
        ] {
            let c =
                contact_probabilities(&cfg(n, m, 0.0, qn as f64 / qd as f64, 0.0, 1, 1)).unwrap();
            let ((p0n, p0d), (p1n, p1d)) = rational_contact(n as i128, m as i128, qn, qd);
            let p0 = p0n as f64 / p0d as f64;
            let p1 = p1n as f64 / p1d as f64;
            assert!(
                (c.p0 - p0).abs() < 1e-15,
                "p0 mismatch for n={n} m={m}: {} vs {p0}",
                c.p0
            );
            assert!(
                (c.p1 - p1).abs() < 1e-15,
                "p1 mismatch for n={n} m={m}: {} vs {p1}",
                c.p1
            );
        }
    }

    #[test]
    fn p1_vanishes_with_q_and_scales_linearly() {
        let base = cfg(50, 8, 0.0, 0.5, 0.01, 2, 3);
        let c1 = contact_probabilities(&base).unwrap();
        let c2 = contact_probabilities(&cfg(50, 8, 0.0, 0.25, 0.01, 2, 3)).unwrap();
        assert!((c1.p1 - 2.0 * c2.p1).abs() < 1e-15);
        assert!(c1.p1 > c2.p1);
        // p0 does not depend on q.
        assert_eq!(c1.p0, c2.p0);
    }

    #[test]
    fn probabilities_independent_of_traffic_parameters() {
        let a = contact_probabilities(&cfg(60, 8, 0.0, 0.3, 0.001, 1, 1)).unwrap();
        let b = contact_probabilities(&cfg(60, 8, 0.0, 0.3, 0.9, 5, 9)).unwrap();
        assert_eq!(a.p0, b.p0);
        assert_eq!(a.p1, b.p1);
    }

    #[test]
    fn validation_reports_every_violation() {
        let bad = cfg(1, 3, -1.0, 0.0, 1.0, 0, 0);
        let err = bad.validate().unwrap_err();
        match err {
            Error::InvalidConfig(v) => {
                assert!(v.contains(&"n ≥ 2 required".to_string()));
                assert!(v.contains(&"m ≥ 4 required".to_string()));
                assert!(v.contains(&"0 < q < 1 required".to_string()));
                assert!(v.contains(&"0 ≤ λ < 1 required".to_string()));
                assert!(v.contains(&"Δ ≥ 0 required".to_string()));
                assert!(v.contains(&"f ≥ 1 required".to_string()));
                assert!(v.contains(&"M ≥ 1 required".to_string()));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boundary_values_of_q_and_lambda() {
        assert!(cfg(10, 4, 0.0, 0.0, 0.1, 1, 1).validate().is_err());
        assert!(cfg(10, 4, 0.0, 1.0, 0.1, 1, 1).validate().is_err());
        // λ = 0 is a legal degenerate case; λ = 1 is not.
        assert!(cfg(10, 4, 0.0, 0.5, 0.0, 1, 1).validate().is_ok());
        assert!(cfg(10, 4, 0.0, 0.5, 1.0, 1, 1).validate().is_err());
    }

    #[test]
    fn reference_workload_is_valid() {
        assert!(cfg(100, 8, 0.0, 0.4, 0.001, 2, 7).validate().is_ok());
    }

    #[test]
    fn large_n_stays_normalized() {
        let c = contact_probabilities(&cfg(5000, 16, 0.0, 0.6, 0.001, 3, 5)).unwrap();
        assert!(c.p0 > 0.0 && c.p1 > 0.0 && c.p2 > 0.0);
        assert!((c.p0 + c.p1 + c.p2 - 1.0).abs() < 1e-12);
    }
}
