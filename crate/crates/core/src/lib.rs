//! Numerical laboratory for quantitative unique continuation of planar
//! p-Laplace equations with drift or weight.

pub mod beltrami;
pub mod dense;
pub mod error;
pub mod field;
pub mod quasiregular;
pub mod singular;
pub mod solver;
pub mod spectral;
pub mod ucp;

pub use error::{Error, Result};
pub use num_complex::Complex64;
