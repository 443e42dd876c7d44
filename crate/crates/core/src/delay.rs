//! The source-delay law as a discrete phase-type distribution.
//!
//! A packet that was just inserted sees the queue in the conditional
//! steady state; from there its remaining time in the queue is the
//! absorption time of the tagged-packet chain (π⁻, T, c⁺), giving
//!
//! * PMF   Pr{U = u} = π⁻ · T^(u−1) · c⁺
//! * CDF   Pr{U ≤ u} = 1 − π⁻ · T^u · 1
//! * mean  π⁻ · (I − T)⁻² · c⁺
//! * var   π⁻ · (I + T) · (I − T)⁻³ · c⁺ − mean²

use crate::linalg::{Lu, Matrix};
use crate::params::{contact_probabilities, NetworkConfig};
use crate::qbd::absorbing_parts;
use crate::steady::{conditional_distribution, solve_pi_omega};
use crate::{Error, Result};
use serde::Serialize;

/// Tail mass below which the adaptive horizon stops.
const TAIL_EPS: f64 = 1e-12;
/// Hard cap for the adaptive horizon.
const HORIZON_CAP: u64 = 1 << 26;

/// Phase-type representation (π⁻, T, c⁺) of the source delay.
#[derive(Debug, Clone)]
pub struct PhaseTypeRep {
    /// Initial distribution over the M·f transient states (the conditional
    /// queue distribution with the empty state dropped).
    pi_minus: Vec<f64>,
    /// Transient transition block, M·f square.
    transient: Matrix,
    /// Absorption probabilities per transient state.
    absorb: Vec<f64>,
}

/// Composes the conditional queue distribution with the tagged-packet
/// chain. Requires λ > 0: with no arrivals there is no inserted packet to
/// condition on.
pub fn phase_type(cfg: &NetworkConfig) -> Result<PhaseTypeRep> {
    let probs = contact_probabilities(cfg)?;
    let pi = solve_pi_omega(cfg)?;
    let conditional = conditional_distribution(cfg, &pi)?;
    let (transient, absorb) = absorbing_parts(cfg, &probs);
    Ok(PhaseTypeRep {
        pi_minus: conditional.values[1..].to_vec(),
        transient,
        absorb,
    })
}

impl PhaseTypeRep {
    /// Builds a representation from raw parts (used by tests).
    pub fn from_parts(pi_minus: Vec<f64>, transient: Matrix, absorb: Vec<f64>) -> Self {
        assert_eq!(pi_minus.len(), transient.rows());
        assert_eq!(absorb.len(), transient.rows());
        PhaseTypeRep {
            pi_minus,
            transient,
            absorb,
        }
    }

    pub fn pi_minus(&self) -> &[f64] {
        &self.pi_minus
    }

    pub fn transient(&self) -> &Matrix {
        &self.transient
    }

    pub fn absorb(&self) -> &[f64] {
        &self.absorb
    }

    /// Power-iteration estimate of ρ(T); strictly below 1 whenever packets
    /// can leave the queue at all.
    pub fn spectral_radius(&self) -> f64 {
        self.transient.spectral_radius()
    }

    /// Pr{U = u}, evaluated by iterating a single row vector through T.
    pub fn pmf(&self, u: u64) -> Result<f64> {
        if u < 1 {
            return Err(Error::PmfSupport(u));
        }
        let mut walk = self.walk();
        for _ in 1..u {
            walk.step();
        }
        Ok(dot(walk.current(), &self.absorb))
    }

    /// Pr{U ≤ u}.
    pub fn cdf(&self, u: u64) -> f64 {
        let mut walk = self.walk();
        for _ in 0..u {
            walk.step();
        }
        1.0 - walk.remaining()
    }

    /// CDF table on 0..=u_max, computed incrementally in one sweep.
    pub fn cdf_table(&self, u_max: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(u_max as usize + 1);
        let mut walk = self.walk();
        out.push(1.0 - walk.remaining()); // u = 0, exactly 0 up to rounding
        for _ in 1..=u_max {
            walk.step();
            out.push(1.0 - walk.remaining());
        }
        out
    }

    /// Remaining tail mass π⁻ · T^u · 1.
    pub fn tail_mass(&self, u: u64) -> f64 {
        let mut walk = self.walk();
        for _ in 0..u {
            walk.step();
        }
        walk.remaining()
    }

    /// Smallest doubling horizon (starting at 1024) whose tail mass drops
    /// below 1e−12, capped at 2²⁶.
    pub fn adaptive_horizon(&self) -> Result<u64> {
        let mut walk = self.walk();
        let mut u = 0u64;
        let mut horizon = 1024u64;
        loop {
            while u < horizon {
                walk.step();
                u += 1;
            }
            let tail = walk.remaining();
            if tail < TAIL_EPS {
                return Ok(horizon);
            }
            if horizon >= HORIZON_CAP {
                return Err(Error::HorizonExceeded {
                    cap: HORIZON_CAP,
                    tail,
                });
            }
            horizon *= 2;
        }
    }

    fn walk(&self) -> TransientWalk<'_> {
        TransientWalk {
            transient: &self.transient,
            v: self.pi_minus.clone(),
            scratch: vec![0.0; self.pi_minus.len()],
        }
    }

    /// Mean delay via two solves against the same LU factorization of
    /// (I − T); the inverse is never formed.
    pub fn mean(&self) -> Result<f64> {
        let (lu, _) = self.factor_i_minus_t()?;
        let y = self.checked_solve(&lu, &self.absorb)?;
        let z = lu.solve(&y);
        Ok(dot(&self.pi_minus, &z))
    }

    /// Delay variance via three solves and one multiplication by (I + T).
    pub fn variance(&self) -> Result<f64> {
        let (lu, _) = self.factor_i_minus_t()?;
        let y = self.checked_solve(&lu, &self.absorb)?;
        let z = lu.solve(&y);
        let w = lu.solve(&z); // (I − T)^{-3} c⁺
        let tw = self.transient.mul_vec(&w);
        let second: f64 = dot(&self.pi_minus, &w) + dot(&self.pi_minus, &tw);
        let mean = dot(&self.pi_minus, &z);
        Ok(second - mean * mean)
    }

    /// Smallest u with CDF(u) ≥ p, by doubling search then bisection.
    pub fn quantile(&self, p: f64) -> Result<u64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::QuantileRange(p));
        }
        if self.cdf(0) >= p {
            return Ok(0);
        }
        let mut hi = 1u64;
        while self.cdf(hi) < p {
            hi *= 2;
            if hi > HORIZON_CAP {
                return Err(Error::HorizonExceeded {
                    cap: HORIZON_CAP,
                    tail: 1.0 - p,
                });
            }
        }
        let mut lo = hi / 2; // cdf(lo) < p ≤ cdf(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn factor_i_minus_t(&self) -> Result<(Lu, usize)> {
        let n = self.transient.rows();
        let mut a = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] -= self.transient[(i, j)];
            }
        }
        Ok((Lu::factor(&a)?, n))
    }

    /// Solve with a residual check so near-singular systems surface as a
    /// typed error instead of silent garbage.
    fn checked_solve(&self, lu: &Lu, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = lu.solve(rhs);
        let n = x.len();
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..n {
                acc -= self.transient[(i, j)] * x[j];
            }
            residual = residual.max((acc - rhs[i]).abs());
        }
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if residual > 1e-8 * scale {
            return Err(Error::NearSingular { residual });
        }
        Ok(x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Reusable-buffer iteration of π⁻ through powers of T.
struct TransientWalk<'a> {
    transient: &'a Matrix,
    v: Vec<f64>,
    scratch: Vec<f64>,
}

impl TransientWalk<'_> {
    fn step(&mut self) {
        self.transient.row_mul_into(&self.v, &mut self.scratch);
        std::mem::swap(&mut self.v, &mut self.scratch);
    }

    fn current(&self) -> &[f64] {
        &self.v
    }

    fn remaining(&self) -> f64 {
        self.v.iter().sum()
    }
}

// ============================================================================
// Summary statistics
// ============================================================================

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Quantiles {
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
}

/// The JSON-facing statistics bundle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SourceDelayStats {
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub quantiles: Quantiles,
}

/// Evaluates mean, variance, standard deviation, and the standard quantiles.
pub fn stats(rep: &PhaseTypeRep) -> Result<SourceDelayStats> {
    let mean = rep.mean()?;
    let variance = rep.variance()?.max(0.0);
    Ok(SourceDelayStats {
        mean,
        variance,
        std_dev: variance.sqrt(),
        quantiles: Quantiles {
            p50: rep.quantile(0.5)?,
            p90: rep.quantile(0.9)?,
            p99: rep.quantile(0.99)?,
        },
    })
}
