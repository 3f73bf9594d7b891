//! Pseudo-spectral solver and verification bench for the approximate
//! deconvolution LES model with a vertical fractional filter
//! `A = I + alpha^(2 theta) (-d3^2)^theta` on the periodic box.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`], [`ops`]: Fourier representation on the 3-torus,
//!   differential operators, Leray projection, dealiasing and norms.
//! * [`filter`]: the vertical filter, its inverse ("bar"), square roots and
//!   the Van Cittert deconvolution family as exact Fourier multipliers.
//! * [`ineq`]: ratio benches for the anisotropic functional inequalities.
//! * [`solver`]: time integration of the deconvolution model.
//! * [`diagnostics`]: energy budget, regularity norms, spectra.
//! * [`config`], [`checkpoint`], [`cli`]: batch front end and file formats.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
mod fft;
pub mod field;
pub mod filter;
pub mod grid;
pub mod ineq;
pub mod ops;
pub mod solver;

pub use error::{Error, Result};
pub use field::{SpectralField, VectorField};
pub use filter::{DeconvSpec, FilterSpec};
pub use grid::Grid;
