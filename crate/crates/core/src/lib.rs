//! Numerical laboratory for a quantitative Carleman estimate for second order
//! elliptic operators `Lu = -div(A∇u) + bᵀ∇u + cu`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: coefficient fields, the singular weight
//! `w(x) = φ(σ(x/ρ))`, the pointwise differential objects built from it, the
//! explicit constant chain, quadrature on annuli and the integral checks.
//! IO, configuration and threading live in the `carleman-lab` crate.
#![no_std]
// Float math goes through `num_traits::Float` (libm) so the crate builds
// without std.

extern crate alloc;

pub mod calculus;
pub mod constants;
pub mod error;
pub mod exec;
pub mod harness;
pub mod interval;
pub mod jet;
pub mod linalg;
pub mod params;
pub mod quadrature;
pub mod sampling;
pub mod summation;
pub mod weight;

pub use error::{CoreError, Result};
pub use jet::{ComplexJet, Jet, Matrix, Vector};
