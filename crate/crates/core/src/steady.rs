//! Stationary and conditional distributions of the local queue.
//!
//! Two independent routes to the stationary law cross-validate each other:
//! a case-split solver following the buffer-size cases (explicit balance
//! equations for M ≤ 2, matrix-geometric level reduction for M ≥ 3) and a
//! dense solve of the assembled transition matrix.

use crate::linalg::{solve_right, Lu, Matrix};
use crate::params::{contact_probabilities, NetworkConfig};
use crate::qbd::{assemble, build_blocks, Chain, StateIndexing};
use crate::{Error, Result};

/// Entries more negative than this are construction bugs, not rounding dust.
const NEGATIVE_DUST: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Long-run law of the queue state.
    Stationary,
    /// Queue state seen by a packet that was just inserted.
    Conditional,
}

/// Probability vector over the 1 + M·f queue states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub values: Vec<f64>,
    pub kind: DistributionKind,
}

impl StateDistribution {
    /// Clips rounding dust, renormalizes, and rejects anything that is not
    /// a proper distribution.
    fn checked(mut values: Vec<f64>, kind: DistributionKind) -> Result<Self> {
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < -NEGATIVE_DUST {
                    return Err(Error::Singular(format!(
                        "distribution entry {v} below clipping tolerance"
                    )));
                }
                *v = 0.0;
            }
        }
        let total: f64 = values.iter().sum();
        if !(total.is_finite() && (total - 1.0).abs() < 1e-10) {
            return Err(Error::Singular(format!(
                "distribution mass {total} too far from 1"
            )));
        }
        for v in values.iter_mut() {
            *v /= total;
        }
        Ok(StateDistribution { values, kind })
    }

    /// Total mass on one queue level.
    pub fn level_mass(&self, indexing: &StateIndexing, level: usize) -> f64 {
        if level == 0 {
            return self.values[0];
        }
        let start = 1 + (level - 1) * indexing.phases;
        self.values[start..start + indexing.phases].iter().sum()
    }

    /// CSV rendering with quoted "(l,j)" labels.
    pub fn to_csv(&self, indexing: &StateIndexing) -> String {
        let mut out = String::from("state,probability\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("\"{}\",{:.16e}\n", indexing.label(i), v));
        }
        out
    }
}

/// Solves x = x·P, Σx = 1 by replacing the redundant balance equation with
/// the normalization row; partial pivoting keeps the solve stable.
fn stationary_of(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = p.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let lu = Lu::factor(&a)?;
    Ok(lu.solve(&b))
}

/// Stationary distribution of the local queue.
///
/// M ≤ 2 solves the explicit balance equations of the degenerate layouts;
/// M ≥ 3 reduces levels through the rate matrices R = A0·(I − A1 −
/// A0·1·unit_row)⁻¹ and R_M = A0·(I − A_M)⁻¹, solves the (1+f)-state
/// boundary system, and normalizes once at the end.
pub fn solve_pi_omega(cfg: &NetworkConfig) -> Result<StateDistribution> {
    let probs = contact_probabilities(cfg)?;
    let levels = cfg.buffer as usize;
    let f = cfg.f as usize;
    let blocks = build_blocks(Chain::Full, cfg, &probs);

    if levels <= 2 {
        // The M = 1 (three-equation) and M = 2 (four-equation) systems are
        // the balance equations of the small assembled chain.
        let p = assemble(&blocks, levels, f)?;
        return StateDistribution::checked(stationary_of(&p)?, DistributionKind::Stationary);
    }

    let identity = Matrix::identity(f);
    let ones_col = vec![1.0; f];
    let mut unit_row = vec![0.0; f];
    unit_row[0] = 1.0;

    // R = A0 · (I − A1 − A0·1·unit_row)^{-1}
    let a0_ones = blocks.a0.mul_vec(&ones_col);
    let mut denom = identity.clone();
    let correction = Matrix::outer(&a0_ones, &unit_row);
    for i in 0..f {
        for j in 0..f {
            denom[(i, j)] -= blocks.a1[(i, j)] + correction[(i, j)];
        }
    }
    let rate = solve_right(&denom, &blocks.a0)?;

    // R_M = A0 · (I − A_M)^{-1}
    let mut denom_m = identity;
    for i in 0..f {
        for j in 0..f {
            denom_m[(i, j)] -= blocks.am[(i, j)];
        }
    }
    let rate_m = solve_right(&denom_m, &blocks.a0)?;

    // Boundary system over [π₀, π₁].
    let mut boundary = Matrix::zeros(1 + f, 1 + f);
    boundary[(0, 0)] = blocks.b1;
    for j in 0..f {
        boundary[(0, 1 + j)] = blocks.b0[j];
        boundary[(1 + j, 0)] = blocks.b2[j];
    }
    boundary.set_block(1, 1, &blocks.a1.add(&rate.mul(&blocks.a2)));
    let head = stationary_of(&boundary)?;

    let mut values = Vec::with_capacity(1 + levels * f);
    values.push(head[0]);
    let mut level_vec = head[1..].to_vec();
    values.extend_from_slice(&level_vec);
    for _ in 2..levels {
        level_vec = rate.row_mul(&level_vec);
        values.extend_from_slice(&level_vec);
    }
    values.extend_from_slice(&rate_m.row_mul(&level_vec));

    let total: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v /= total;
    }
    StateDistribution::checked(values, DistributionKind::Stationary)
}

/// Independent oracle: builds the full transition matrix and solves the
/// global balance equations densely.
pub fn solve_pi_omega_dense(cfg: &NetworkConfig) -> Result<StateDistribution> {
    let probs = contact_probabilities(cfg)?;
    let blocks = build_blocks(Chain::Full, cfg, &probs);
    let p = assemble(&blocks, cfg.buffer as usize, cfg.f as usize)?;
    StateDistribution::checked(stationary_of(&p)?, DistributionKind::Stationary)
}

/// Queue state distribution seen by a freshly inserted packet:
/// π·P₂ / (λ·π·P₁·1), where P₁ restricts transitions to "queue can accept"
/// and P₂ to "arrival generated and accepted".
pub fn conditional_distribution(
    cfg: &NetworkConfig,
    pi_omega: &StateDistribution,
) -> Result<StateDistribution> {
    cfg.validate()?;
    if cfg.lambda <= 0.0 {
        return Err(Error::LambdaZero);
    }
    let probs = contact_probabilities(cfg)?;
    let levels = cfg.buffer as usize;
    let f = cfg.f as usize;
    let acceptance = assemble(&build_blocks(Chain::Acceptance, cfg, &probs), levels, f)?;
    let arrival = assemble(
        &build_blocks(Chain::AcceptedArrival, cfg, &probs),
        levels,
        f,
    )?;

    let numerator = arrival.transpose().mul_vec(&pi_omega.values);
    let acceptance_mass: f64 = acceptance
        .transpose()
        .mul_vec(&pi_omega.values)
        .iter()
        .sum();
    let denominator = cfg.lambda * acceptance_mass;
    if denominator <= 0.0 {
        return Err(Error::Singular("acceptance probability is zero".into()));
    }
    let values: Vec<f64> = numerator.iter().map(|v| v / denominator).collect();
    debug_assert_eq!(values[0], 0.0);
    StateDistribution::checked(values, DistributionKind::Conditional)
}

/// Long-run probability that a generated packet is accepted, π·P₁·1.
pub fn acceptance_probability(cfg: &NetworkConfig, pi_omega: &StateDistribution) -> Result<f64> {
    let probs = contact_probabilities(cfg)?;
    let levels = cfg.buffer as usize;
    let f = cfg.f as usize;
    let acceptance = assemble(&build_blocks(Chain::Acceptance, cfg, &probs), levels, f)?;
    Ok(acceptance
        .transpose()
        .mul_vec(&pi_omega.values)
        .iter()
        .sum())
}

/// Max-norm residual ‖π·P₀ − π‖∞, exposed so callers can detect numerical
/// degradation on extreme parameters.
pub fn fixed_point_residual(cfg: &NetworkConfig, pi: &StateDistribution) -> Result<f64> {
    let probs = contact_probabilities(cfg)?;
    let blocks = build_blocks(Chain::Full, cfg, &probs);
    let p = assemble(&blocks, cfg.buffer as usize, cfg.f as usize)?;
    let mapped = p.transpose().mul_vec(&pi.values);
    Ok(mapped
        .iter()
        .zip(&pi.values)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}
