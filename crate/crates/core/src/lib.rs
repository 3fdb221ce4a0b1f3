//! Simulation and verification laboratory for dependent site percolation on
//! the square lattice.
//!
//! The spin fields studied here are monotone functions of i.i.d. variables
//! indexed by a countable set, with a finite, local "determinedness"
//! enumeration. Three such models are provided: Bernoulli site percolation,
//! a majority-in-box model, and the sub-critical Ising model sampled exactly
//! by monotone coupling from the past.
//!
//! Module map:
//!
//! - [`grid`]: lattice geometry (vertices, boxes, annuli, adjacency).
//! - [`field`]: the single-site laws `mu(h)` and a counter-based random field.
//! - [`models`]: the three finitary models behind one sampling interface.
//! - [`percolation`]: cluster labeling, crossings, connections, circuits.
//! - [`exact`]: enumeration oracles on small boxes (exact polynomials in `p`).
//! - [`estimators`]: Monte Carlo harness (estimates, sweeps, critical point,
//!   tail fits, pivotality, mixing, finite-size criterion).
//! - [`validate`]: the invariant suite behind the `validate` CLI command.

pub mod error;
pub mod estimators;
pub mod event;
pub mod exact;
pub mod field;
pub mod grid;
pub mod models;
pub mod percolation;
pub mod poly;
pub mod stats;
pub mod union_find;
pub mod validate;

pub use error::{Error, Result};
pub use event::{Direction, Event, EventKind};
pub use field::{FieldKey, MuFamily, Seed, Tails};
pub use grid::{Adjacency, Annulus, Rect, Vertex};
pub use models::{ModelKind, ModelSpec, SampleOptions, SpinWindow};
pub use poly::PolynomialInP;
pub use stats::{Estimate, TailFit};
