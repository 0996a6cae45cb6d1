//! Asynchronous Game of Life laboratory.
//!
//! The crate is organised around a bit-packed [`Grid`] and a small set of
//! experiment modules built on top of it:
//!
//! * [`engine`]: neighbour sums, the life rule, synchronous and
//!   alpha-asynchronous stepping, noise injection, seeding helpers.
//! * [`phase`]: frozen-state detection, the hold-probability sweep and
//!   critical density decay.
//! * [`glider`]: glider template matching and the occurrence sweep.
//! * [`gate`]: probabilistic AND/OR gates driven by tuned noise.
//! * [`percolation`]: directed site percolation reference model.
//! * [`fit`]: sigmoid, power-law and polynomial least-squares fitters.
//! * [`render`]: dependency-free SVG output for grids and curves.
//!
//! All randomness flows through [`RngStream`], a counter-based generator, so
//! every result is a pure function of the master seed and the stream path
//! and does not depend on evaluation order or thread count.

pub mod engine;
pub mod error;
pub mod fit;
pub mod gate;
pub mod glider;
pub mod grid;
pub mod par;
pub mod pattern;
pub mod percolation;
pub mod phase;
pub mod render;
pub mod rng;

pub use engine::{RuleVariant, UpdateParams};
pub use error::{Error, Result};
pub use grid::{BoundaryMode, Grid, Rect};
pub use rng::{DrawKind, RngStream};
