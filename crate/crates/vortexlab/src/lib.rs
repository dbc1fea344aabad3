//! Numerical laboratory for the 2D Euler equations linearized around a
//! radially decreasing vortex: spectral density functions, Green's kernels
//! of the long-range potential, the discretized linear operator, and the
//! time evolution of single azimuthal modes.
//!
//! All computations use the log variable v = log r.

pub mod config;
pub mod cutoffs;
pub mod error;
pub mod evolution;
pub mod greens;
pub mod grid;
pub mod norms;
pub mod oracle;
pub mod pipeline;
pub mod profile;
pub mod quad;
pub mod sdf;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::Grid;
pub use profile::{ProfileKind, VortexProfile};
