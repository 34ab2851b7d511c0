//! Non-autonomous iterated function systems (NIFS) on the complex plane.
//!
//! The crate builds systems of contracting map families, enumerates their
//! pieces with conservative disk/interval enclosures, and produces
//! machine-checkable certificates that the limit set is pointwise thin at a
//! chosen point (a sequence of separating round annuli with growing moduli
//! and shrinking diameters).
//!
//! Modules:
//! - [`geometry`]: disks, intervals, round annuli, separation predicates,
//!   hyperbolic distance on a disk domain.
//! - [`maps`]: affine maps, square-root inverse branches and their
//!   compositions, with certified image enclosures.
//! - [`nifs`]: systems, words, pieces, projections, stage combination.
//! - [`families`]: the built-in system families.
//! - [`certify`]: per-stage separation statistics and thinness certificates.
//! - [`julia`]: non-autonomous Julia sets of `a_j·(a z² + c)`.
//! - [`seqlang`]: a small expression language for sequence rules.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod families;
pub mod geometry;
pub mod julia;
pub mod maps;
pub mod nifs;
pub mod seqlang;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Number of boundary samples used by enclosure computations unless a caller
/// asks for something else.
pub const DEFAULT_SAMPLES: usize = 256;

/// Default cap on the number of enumerated pieces.
pub const DEFAULT_PIECE_CAP: usize = 1_000_000;
