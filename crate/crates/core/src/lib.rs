//! Numerical workbench for row contractions on truncated full Fock spaces.
//!
//! The crate builds explicit complex matrices for the standard cast of
//! multivariable operator theory at desk scale: left/right creation
//! operators and the flip on a truncated Fock space, Redheffer products of
//! 2x2 block systems, the J-unitary automorphism group of the unit ball
//! together with its implementing unitaries, Poisson kernels and
//! characteristic functions of row contractions, and their constrained
//! (e.g. commutative) variants. On top of that sit seeded property suites
//! that verify the transformation laws connecting all of these objects,
//! with every residual, tolerance and predicted geometric scale recorded
//! in a reproducible report.

pub mod artifact;
pub mod autgroup;
pub mod cmatrix;
pub mod constrained;
pub mod error;
pub mod fock;
pub mod linop;
pub mod redheffer;
pub mod report;
pub mod rowcon;
pub mod suite;
pub mod transform;
pub mod words;

pub use cmatrix::{CMatrix, CVector, Complex64};
pub use error::{Error, Result};
