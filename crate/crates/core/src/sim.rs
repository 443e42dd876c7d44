//! Slot-level protocol simulator.
//!
//! Each slot runs the full pipeline of the modeled system: IID re-placement
//! of every node on the m × m torus, round-robin activation of one
//! equivalent class of cells, fair selection of one transmitter per active
//! cell, the PD-f dispatch decision for every selected node, and finally
//! Bernoulli packet generation with tail-drop at buffer size M. Service
//! runs before arrivals inside a slot, so an arrival into a full queue is
//! accepted exactly when the head-of-line packet left in the same slot.
//!
//! Destinations follow the fixed permutation D(i) = (i+1) mod n.

use crate::parallel::parallel_map;
use crate::params::NetworkConfig;
use crate::qbd::QueueState;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;

/// One queued packet: when it was inserted and how often its source has
/// dispatched it while at the head of the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub inserted_slot: u64,
    pub dispatch_count: u32,
}

/// What a node did in one slot; exactly one variant per node per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmission {
    /// Source-destination transmission (head-of-line packet delivered).
    SourceDest,
    /// Packet-dispatch transmission (broadcast; counts toward the limit f).
    Dispatch,
    /// Neither.
    Idle,
}

/// Per-node event record for one slot, for instrumentation and tests.
#[derive(Debug, Clone)]
pub struct SlotEvents {
    pub tx: Vec<Transmission>,
    /// Head-of-line packet removed from the node's queue this slot.
    pub removed: Vec<Option<Packet>>,
    /// Bernoulli(λ) generation fired.
    pub generated: Vec<bool>,
    /// Queue could accept an arrival at the insertion point of this slot.
    pub acceptable: Vec<bool>,
}

impl SlotEvents {
    fn new(n: usize) -> Self {
        SlotEvents {
            tx: vec![Transmission::Idle; n],
            removed: vec![None; n],
            generated: vec![false; n],
            acceptable: vec![false; n],
        }
    }

    fn reset(&mut self) {
        self.tx.fill(Transmission::Idle);
        self.removed.fill(None);
        self.generated.fill(false);
        self.acceptable.fill(false);
    }
}

/// Full simulation state.
pub struct World {
    cfg: NetworkConfig,
    alpha: u32,
    slot: u64,
    /// Cell index (y·m + x) per node, refreshed every slot.
    positions: Vec<u32>,
    queues: Vec<VecDeque<Packet>>,
    rng: ChaCha8Rng,
    /// Node buckets per cell, rebuilt every slot.
    cells: Vec<Vec<u32>>,
}

impl World {
    /// Creates a world seeded from `(seed, stream)`; independent streams
    /// give independent replicas of the same seed.
    pub fn new(cfg: &NetworkConfig, seed: u64, stream: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n = cfg.n as usize;
        let cells = (cfg.m * cfg.m) as usize;
        Ok(World {
            cfg: *cfg,
            alpha: cfg.alpha(),
            slot: 0,
            positions: vec![0; n],
            queues: vec![VecDeque::new(); n],
            rng,
            cells: vec![Vec::new(); cells],
        })
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    /// Destination of node `i` under the permutation traffic pattern.
    pub fn destination(&self, i: usize) -> usize {
        (i + 1) % self.cfg.n as usize
    }

    /// Queue state (level, head-of-line phase) of one node.
    pub fn queue_state(&self, i: usize) -> QueueState {
        let level = self.queues[i].len() as u32;
        let phase = self.queues[i].front().map_or(0, |p| p.dispatch_count);
        QueueState { level, phase }
    }

    /// Advances one slot and reports per-node events.
    pub fn step(&mut self) -> SlotEvents {
        let mut events = SlotEvents::new(self.cfg.n as usize);
        self.step_into(&mut events);
        events
    }

    /// Advances one slot, writing events into a reusable buffer.
    pub fn step_into(&mut self, events: &mut SlotEvents) {
        events.reset();
        let n = self.cfg.n as usize;
        let m = self.cfg.m;
        let cell_count = m * m;

        // (1) IID mobility: every node lands in a uniform cell.
        for cell in self.cells.iter_mut() {
            cell.clear();
        }
        for i in 0..n {
            let cell = self.rng.gen_range(0..cell_count);
            self.positions[i] = cell;
            self.cells[cell as usize].push(i as u32);
        }

        // (2) Activate one equivalent class per slot, round-robin in
        // row-major order over the α × α offsets.
        let alpha = self.alpha;
        let ec = (self.slot % (alpha as u64 * alpha as u64)) as u32;
        let (row_off, col_off) = (ec / alpha, ec % alpha);

        // (3)+(4) one transmitter per occupied active cell runs PD-f.
        let mut cy = row_off;
        while cy < m {
            let mut cx = col_off;
            while cx < m {
                let cell = (cy * m + cx) as usize;
                if !self.cells[cell].is_empty() {
                    let members = &self.cells[cell];
                    let pick = self.rng.gen_range(0..members.len());
                    let node = members[pick] as usize;
                    self.run_dispatch(node, events);
                }
                cx += alpha;
            }
            cy += alpha;
        }

        // (5) Bernoulli generation, inserted only if the queue has room
        // after this slot's service.
        let capacity = self.cfg.buffer as usize;
        for i in 0..n {
            events.acceptable[i] = self.queues[i].len() < capacity;
            if self.rng.gen::<f64>() < self.cfg.lambda {
                events.generated[i] = true;
                if events.acceptable[i] {
                    self.queues[i].push_back(Packet {
                        inserted_slot: self.slot,
                        dispatch_count: 0,
                    });
                }
            }
        }

        self.slot += 1;
    }

    /// Algorithm of the PD-f scheme for one selected node.
    fn run_dispatch(&mut self, node: usize, events: &mut SlotEvents) {
        if self.queues[node].is_empty() {
            return; // remains idle
        }
        let dest = self.destination(node);
        if self.in_range(self.positions[node], self.positions[dest]) {
            events.tx[node] = Transmission::SourceDest;
            events.removed[node] = self.queues[node].pop_front();
        } else if self.rng.gen::<f64>() < self.cfg.q {
            events.tx[node] = Transmission::Dispatch;
            let hol = self.queues[node].front_mut().expect("nonempty queue");
            hol.dispatch_count += 1;
            if hol.dispatch_count >= self.cfg.f {
                events.removed[node] = self.queues[node].pop_front();
            }
        }
    }

    /// D's cell lies in the 3 × 3 torus neighborhood of S's cell.
    fn in_range(&self, a: u32, b: u32) -> bool {
        let m = self.cfg.m;
        let (ax, ay) = (a % m, a / m);
        let (bx, by) = (b % m, b / m);
        let dx = ax.abs_diff(bx).min(m - ax.abs_diff(bx));
        let dy = ay.abs_diff(by).min(m - ay.abs_diff(by));
        dx <= 1 && dy <= 1
    }

    /// Lower bound on the distance between any two points of two cells,
    /// with torus wraparound. Used by the protocol-model safety check.
    pub fn min_cell_gap(&self, a: u32, b: u32) -> f64 {
        let m = self.cfg.m;
        let (ax, ay) = (a % m, a / m);
        let (bx, by) = (b % m, b / m);
        let dx = ax.abs_diff(bx).min(m - ax.abs_diff(bx)) as f64;
        let dy = ay.abs_diff(by).min(m - ay.abs_diff(by)) as f64;
        let gx = (dx - 1.0).max(0.0) / m as f64;
        let gy = (dy - 1.0).max(0.0) / m as f64;
        (gx * gx + gy * gy).sqrt()
    }
}

// ============================================================================
// Delay measurement runs
// ============================================================================

/// Empirical source-delay measurements of one run (or merged replicas).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDelay {
    /// One integer delay per packet inserted after warmup and removed
    /// before the end; packets still queued at the end are censored.
    pub samples: Vec<u64>,
    /// Packets accepted after warmup.
    pub accepted: u64,
    /// Packets dropped (queue full) after warmup.
    pub dropped: u64,
    pub slots_run: u64,
    pub seed: u64,
}

impl EmpiricalDelay {
    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        Some(self.samples.iter().map(|&d| d as f64).sum::<f64>() / self.samples.len() as f64)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Option<f64> {
        let k = self.samples.len();
        if k < 2 {
            return None;
        }
        let mean = self.mean()?;
        let ss: f64 = self
            .samples
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum();
        Some(ss / (k - 1) as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Runs one replica for `slots` slots, sampling the delay of every packet
/// inserted at or after slot `warmup` and removed before the end.
pub fn run(cfg: &NetworkConfig, slots: u64, warmup: u64, seed: u64) -> Result<EmpiricalDelay> {
    run_stream(cfg, slots, warmup, seed, 0)
}

/// Like [`run`] but on an explicit RNG stream, for replica fan-out.
pub fn run_stream(
    cfg: &NetworkConfig,
    slots: u64,
    warmup: u64,
    seed: u64,
    stream: u64,
) -> Result<EmpiricalDelay> {
    if slots <= warmup {
        return Err(Error::InvalidConfig(vec!["slots > warmup required".into()]));
    }
    let mut world = World::new(cfg, seed, stream)?;
    let n = cfg.n as usize;
    let mut events = SlotEvents::new(n);
    let mut out = EmpiricalDelay {
        samples: Vec::new(),
        accepted: 0,
        dropped: 0,
        slots_run: slots,
        seed,
    };
    for slot in 0..slots {
        world.step_into(&mut events);
        for i in 0..n {
            if let Some(packet) = events.removed[i] {
                if packet.inserted_slot >= warmup {
                    out.samples.push(slot - packet.inserted_slot);
                }
            }
            if slot >= warmup && events.generated[i] {
                if events.acceptable[i] {
                    out.accepted += 1;
                } else {
                    out.dropped += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Runs `replicas` independent streams (in parallel up to `threads`) and
/// merges them in replica order.
pub fn run_replicas(
    cfg: &NetworkConfig,
    slots: u64,
    warmup: u64,
    seed: u64,
    replicas: u32,
    threads: usize,
) -> Result<EmpiricalDelay> {
    cfg.validate()?;
    if slots <= warmup {
        return Err(Error::InvalidConfig(vec!["slots > warmup required".into()]));
    }
    let results = parallel_map(replicas.max(1) as usize, threads, |i| {
        run_stream(cfg, slots, warmup, seed, i as u64)
    });
    let mut merged = EmpiricalDelay {
        samples: Vec::new(),
        accepted: 0,
        dropped: 0,
        slots_run: 0,
        seed,
    };
    for r in results {
        let r = r?;
        merged.samples.extend_from_slice(&r.samples);
        merged.accepted += r.accepted;
        merged.dropped += r.dropped;
        merged.slots_run += r.slots_run;
    }
    Ok(merged)
}

// ============================================================================
// Single-slot event frequencies (contact-probability oracle)
// ============================================================================

/// Measured per-slot frequencies of the three transmission outcomes for a
/// permanently backlogged tagged node, with binomial standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EventFrequencies {
    pub freq_p0: f64,
    pub freq_p1: f64,
    pub freq_p2: f64,
    pub se_p0: f64,
    pub se_p1: f64,
    pub se_p2: f64,
    pub slots: u64,
}

/// Runs the mobility + MAC + range-check pipeline with node 0 always
/// backlogged (its head-of-line packet pinned below the dispatch limit) and
/// counts how often each transmission outcome occurs.
pub fn single_slot_event_frequencies(
    cfg: &NetworkConfig,
    slots: u64,
    seed: u64,
) -> Result<EventFrequencies> {
    cfg.validate()?;
    let m = cfg.m;
    let alpha = cfg.alpha();
    let cell_count = m * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let n = cfg.n as usize;
    let mut positions = vec![0u32; n];
    let (mut count0, mut count1) = (0u64, 0u64);
    for slot in 0..slots {
        for pos in positions.iter_mut() {
            *pos = rng.gen_range(0..cell_count);
        }
        let tagged = positions[0];
        let (tx, ty) = (tagged % m, tagged / m);
        let ec = (slot % (alpha as u64 * alpha as u64)) as u32;
        let active = ty % alpha == ec / alpha && tx % alpha == ec % alpha;
        if !active {
            continue;
        }
        // Fair contention against every co-located node.
        let occupants = positions.iter().filter(|&&p| p == tagged).count();
        let selected = rng.gen_range(0..occupants) == 0;
        if !selected {
            continue;
        }
        let dest = positions[1];
        let (dx0, dy0) = (dest % m, dest / m);
        let dx = tx.abs_diff(dx0).min(m - tx.abs_diff(dx0));
        let dy = ty.abs_diff(dy0).min(m - ty.abs_diff(dy0));
        if dx <= 1 && dy <= 1 {
            count0 += 1;
        } else if rng.gen::<f64>() < cfg.q {
            count1 += 1;
        }
    }
    let total = slots as f64;
    let f0 = count0 as f64 / total;
    let f1 = count1 as f64 / total;
    let se = |p: f64| (p * (1.0 - p) / total).sqrt();
    Ok(EventFrequencies {
        freq_p0: f0,
        freq_p1: f1,
        freq_p2: 1.0 - f0 - f1,
        se_p0: se(f0),
        se_p1: se(f1),
        se_p2: se(1.0 - f0 - f1),
        slots,
    })
}
