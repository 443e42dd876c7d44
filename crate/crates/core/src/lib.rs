//! Source-delay analysis for cell-partitioned MANETs under the PD-f
//! dispatch scheme.
//!
//! The library has two engines that cross-validate each other:
//!
//! * an analytic engine that models the source node's local queue as a
//!   quasi-birth-and-death process and evaluates the exact source-delay
//!   distribution (PMF, CDF, mean, variance) as a discrete phase-type law,
//! * a slot-level protocol simulator (torus cells, IID mobility,
//!   equivalent-class MAC, PD-f dispatching, Bernoulli packet generation,
//!   finite local queues) that produces empirical delay samples.
//!
//! Typical use:
//!
//! ```
//! use qbd_manet::{NetworkConfig, delay};
//!
//! let cfg = NetworkConfig { n: 100, m: 8, delta: 0.0, q: 0.4, lambda: 0.001, f: 2, buffer: 7 };
//! let rep = delay::phase_type(&cfg).unwrap();
//! let mean = rep.mean().unwrap();
//! assert!(mean > 1.0);
//! ```

pub mod compare;
pub mod delay;
pub mod error;
pub mod linalg;
pub mod params;
pub mod qbd;
pub mod sim;
pub mod steady;

mod parallel;

pub use error::Error;
pub use parallel::parallel_map;
pub use params::{compute_alpha, contact_probabilities, ContactProbabilities, NetworkConfig};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
