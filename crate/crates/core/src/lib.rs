//! Constructive shear calculus on complex affine space.
//!
//! The crate builds up from exact sparse polynomial arithmetic to four
//! pipelines: decomposition of polynomial vector fields into complete shear
//! fields, approximation of automorphisms by concatenated shear flows,
//! interpolation of automorphism-valued curves at finitely many parameter
//! values, and the affine/elementary factorization of planar polynomial
//! automorphisms.

pub mod aut;
pub mod decompose;
pub mod engine;
pub mod error;
pub mod interpolate;
pub mod json;
pub mod linalg;
pub mod planar;
pub mod poly;
pub mod polymap;
pub mod scalar;
pub mod shear;
pub mod vectorfield;

pub use error::{Error, Result};
pub use scalar::{Backend, Scalar, DEFAULT_TOL};
