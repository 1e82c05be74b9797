//! Grids, sampled fields, Wirtinger calculus and disc norms.

mod calculus;
mod grid;
pub mod io;
mod norms;
mod sampled;

pub use calculus::{
    gradient, smooth_step, taper_weight, tapered_samples, wirtinger_derivatives, wirtinger_real,
    DerivativeMethod,
};
pub use grid::DiskGrid;
pub use norms::{norm_on_disc, AnalyticField, DiscSampler, DiscSamples, MIN_DISC_SAMPLES};
pub use sampled::{ComplexField, Field, RealField, Sample, VectorField2};
