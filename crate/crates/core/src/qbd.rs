//! Block construction and assembly for the local-queue QBD process.
//!
//! The queue state is the pair (level, phase) = (queue length, dispatch
//! count of the head-of-line packet). Four related chains share one
//! block-tridiagonal layout and differ only in how the seven sub-blocks
//! are filled:
//!
//! * [`Chain::Full`]: the complete one-slot transition matrix,
//! * [`Chain::Acceptance`]: sub-stochastic transitions restricted to the
//!   event "the queue can accept an arrival this slot",
//! * [`Chain::AcceptedArrival`]: joint transitions "arrival generated and
//!   accepted",
//! * [`Chain::Absorbing`]: the tagged-packet chain whose absorption time
//!   is the source delay (arrivals behind the tagged packet ignored).

use crate::linalg::Matrix;
use crate::params::{ContactProbabilities, NetworkConfig};
use crate::{Error, Result};

// ============================================================================
// State space
// ============================================================================

/// A local-queue state: `level` packets queued, head-of-line packet already
/// dispatched `phase` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueState {
    pub level: u32,
    pub phase: u32,
}

/// Bijection between queue states and linear indices.
///
/// States are ordered (0,0), (1,0), …, (1,f−1), (2,0), …, (M,f−1); the
/// empty state sits at index 0 and (l,j) at 1 + (l−1)·f + j.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateIndexing {
    /// Buffer size M (number of nonempty levels).
    pub levels: usize,
    /// Dispatch limit f (phases per nonempty level).
    pub phases: usize,
}

impl StateIndexing {
    pub fn new(levels: usize, phases: usize) -> Self {
        assert!(levels >= 1 && phases >= 1);
        StateIndexing { levels, phases }
    }

    pub fn for_config(cfg: &NetworkConfig) -> Self {
        StateIndexing::new(cfg.buffer as usize, cfg.f as usize)
    }

    /// Total number of states, 1 + M·f.
    pub fn count(&self) -> usize {
        1 + self.levels * self.phases
    }

    pub fn index(&self, state: QueueState) -> usize {
        let (l, j) = (state.level as usize, state.phase as usize);
        if l == 0 {
            assert_eq!(j, 0);
            0
        } else {
            assert!(l <= self.levels && j < self.phases);
            1 + (l - 1) * self.phases + j
        }
    }

    pub fn state(&self, index: usize) -> QueueState {
        assert!(index < self.count());
        if index == 0 {
            QueueState { level: 0, phase: 0 }
        } else {
            let rest = index - 1;
            QueueState {
                level: (rest / self.phases + 1) as u32,
                phase: (rest % self.phases) as u32,
            }
        }
    }

    /// Label "(l,j)" used by the CSV dumps.
    pub fn label(&self, index: usize) -> String {
        let s = self.state(index);
        format!("({},{})", s.level, s.phase)
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.count()).map(|i| self.label(i)).collect()
    }
}

// ============================================================================
// Elementary vectors and matrices
// ============================================================================

/// The per-phase pieces every block is built from.
///
/// For the head-of-line packet in a slot: `removal[j]` is the probability
/// it leaves the queue from phase j (source-destination transmission at any
/// phase, plus the f-th dispatch from the last phase); `retain` holds the
/// complementary phase transitions (hold on the diagonal, advance on the
/// superdiagonal); `unit_row` restarts a freshly exposed packet at phase 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryParts {
    pub removal: Vec<f64>,
    pub unit_row: Vec<f64>,
    pub retain: Matrix,
}

pub fn elementary_parts(probs: &ContactProbabilities, f: u32) -> ElementaryParts {
    assert!(f >= 1);
    let f = f as usize;
    let mut removal = vec![probs.p0; f];
    removal[f - 1] = probs.p0 + probs.p1;
    let mut unit_row = vec![0.0; f];
    unit_row[0] = 1.0;
    let mut retain = Matrix::zeros(f, f);
    for j in 0..f {
        retain[(j, j)] = probs.p2;
        if j + 1 < f {
            retain[(j, j + 1)] = probs.p1;
        }
    }
    ElementaryParts {
        removal,
        unit_row,
        retain,
    }
}

// ============================================================================
// Chains and blocks
// ============================================================================

/// Which of the four related chains a block set instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    /// Complete one-slot transition matrix of the local queue (row-stochastic).
    Full,
    /// Transitions on the event "queue can accept an arrival" (sub-stochastic).
    Acceptance,
    /// Transitions jointly with an accepted arrival (row sums λ-scaled).
    AcceptedArrival,
    /// Tagged-packet chain; state (0,0) becomes absorbing.
    Absorbing,
}

/// Coefficient table for one chain: every f × f block is x·retain +
/// y·removal·unit_row, the boundary column is a multiple of removal and the
/// boundary row a multiple of the unit row. One table serves all M,
/// including the degenerate M = 1 and M = 2 layouts.
struct BlockCoefficients {
    b1: f64,
    b0: f64, // times unit_row
    b2: f64, // times removal
    a0_retain: f64,
    a1_retain: f64,
    a1_outer: f64,
    a2_outer: f64,
    am_retain: f64,
    am_outer: f64,
}

fn coefficients(chain: Chain, lambda: f64) -> BlockCoefficients {
    let l = lambda;
    match chain {
        Chain::Full => BlockCoefficients {
            b1: 1.0 - l,
            b0: l,
            b2: 1.0 - l,
            a0_retain: l,
            a1_retain: 1.0 - l,
            a1_outer: l,
            a2_outer: 1.0 - l,
            // A_M = A_1 + A_0: a service completion refills the slot an
            // accepted arrival takes, so a full queue stays full.
            am_retain: 1.0,
            am_outer: l,
        },
        Chain::Acceptance => BlockCoefficients {
            b1: 1.0,
            b0: 0.0,
            b2: 1.0,
            a0_retain: 0.0,
            a1_retain: 1.0,
            a1_outer: 0.0,
            a2_outer: 1.0,
            am_retain: 0.0,
            am_outer: 0.0,
        },
        Chain::AcceptedArrival => BlockCoefficients {
            b1: 0.0,
            b0: l,
            b2: 0.0,
            a0_retain: l,
            a1_retain: 0.0,
            a1_outer: l,
            a2_outer: 0.0,
            am_retain: 0.0,
            am_outer: l,
        },
        Chain::Absorbing => BlockCoefficients {
            b1: 1.0,
            b0: 0.0,
            b2: 1.0,
            a0_retain: 0.0,
            a1_retain: 1.0,
            a1_outer: 0.0,
            a2_outer: 1.0,
            am_retain: 1.0,
            am_outer: 0.0,
        },
    }
}

/// The seven sub-blocks of one chain, ready for assembly.
#[derive(Debug, Clone)]
pub struct QbdBlocks {
    pub chain: Chain,
    /// Phases per level (f).
    pub phases: usize,
    /// 1 × f boundary row: transitions out of (0,0) into level 1.
    pub b0: Vec<f64>,
    /// 1 × 1 boundary self-transition of (0,0).
    pub b1: f64,
    /// f × 1 boundary column: level 1 into (0,0).
    pub b2: Vec<f64>,
    /// Level up.
    pub a0: Matrix,
    /// Level hold (interior).
    pub a1: Matrix,
    /// Level down.
    pub a2: Matrix,
    /// Level hold at the full-buffer boundary.
    pub am: Matrix,
}

/// Fills the seven blocks for `chain` from one coefficient table.
pub fn build_blocks(chain: Chain, cfg: &NetworkConfig, probs: &ContactProbabilities) -> QbdBlocks {
    let parts = elementary_parts(probs, cfg.f);
    let co = coefficients(chain, cfg.lambda);
    let outer = Matrix::outer(&parts.removal, &parts.unit_row);
    let f = cfg.f as usize;

    let mut b0 = vec![0.0; f];
    b0[0] = co.b0;
    let b2: Vec<f64> = parts.removal.iter().map(|c| co.b2 * c).collect();

    let combine = |retain_coef: f64, outer_coef: f64| {
        parts
            .retain
            .scale(retain_coef)
            .add(&outer.scale(outer_coef))
    };

    QbdBlocks {
        chain,
        phases: f,
        b0,
        b1: co.b1,
        b2,
        a0: combine(co.a0_retain, 0.0),
        a1: combine(co.a1_retain, co.a1_outer),
        a2: combine(0.0, co.a2_outer),
        am: combine(co.am_retain, co.am_outer),
    }
}

/// Assembles the full (1 + M·f)² transition matrix.
///
/// M = 1 uses only the boundary blocks and A_M; M = 2 has no repeated
/// interior level; M ≥ 3 repeats (A_2, A_1, A_0) on the interior levels.
pub fn assemble(blocks: &QbdBlocks, levels: usize, phases: usize) -> Result<Matrix> {
    if phases != blocks.phases {
        return Err(Error::DimensionMismatch(format!(
            "blocks built for f = {}, assembly requested f = {}",
            blocks.phases, phases
        )));
    }
    if levels < 1 {
        return Err(Error::DimensionMismatch("M ≥ 1 required".into()));
    }
    let f = phases;
    let n = 1 + levels * f;
    let mut p = Matrix::zeros(n, n);
    p[(0, 0)] = blocks.b1;
    for j in 0..f {
        p[(0, 1 + j)] = blocks.b0[j];
        p[(1 + j, 0)] = blocks.b2[j];
    }
    for level in 1..=levels {
        let r0 = 1 + (level - 1) * f;
        let diag = if level == levels {
            &blocks.am
        } else {
            &blocks.a1
        };
        p.set_block(r0, r0, diag);
        if level < levels {
            p.set_block(r0, r0 + f, &blocks.a0);
        }
        if level >= 2 {
            p.set_block(r0, r0 - f, &blocks.a2);
        }
    }
    Ok(p)
}

/// Transient block T and absorption column c⁺ of the tagged-packet chain.
///
/// Equivalent to assembling [`Chain::Absorbing`] and deleting the (0,0) row
/// and column, but built directly: the diagonal holds the phase block, the
/// subdiagonal exposes the next packet at phase 0, and only level 1 can
/// absorb.
pub fn absorbing_parts(cfg: &NetworkConfig, probs: &ContactProbabilities) -> (Matrix, Vec<f64>) {
    let parts = elementary_parts(probs, cfg.f);
    let f = cfg.f as usize;
    let levels = cfg.buffer as usize;
    let n = levels * f;
    let mut t = Matrix::zeros(n, n);
    let mut c_plus = vec![0.0; n];
    c_plus[..f].copy_from_slice(&parts.removal);
    let outer = Matrix::outer(&parts.removal, &parts.unit_row);
    for level in 0..levels {
        t.set_block(level * f, level * f, &parts.retain);
        if level >= 1 {
            t.set_block(level * f, (level - 1) * f, &outer);
        }
    }
    (t, c_plus)
}

// ============================================================================
// Debug dump
// ============================================================================

/// Renders a matrix as CSV with "(l,j)" state labels, for inspection.
/// Labels are quoted since they contain commas.
pub fn matrix_csv(matrix: &Matrix, indexing: &StateIndexing) -> String {
    let labels = indexing.labels();
    assert_eq!(matrix.rows(), labels.len());
    assert_eq!(matrix.cols(), labels.len());
    let mut out = String::from("state");
    for l in &labels {
        out.push_str(&format!(",\"{l}\""));
    }
    out.push('\n');
    for i in 0..matrix.rows() {
        out.push_str(&format!("\"{}\"", labels[i]));
        for j in 0..matrix.cols() {
            out.push(',');
            out.push_str(&format!("{:.16e}", matrix[(i, j)]));
        }
        out.push('\n');
    }
    out
}
