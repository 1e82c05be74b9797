use num_complex::Complex64;

use super::{ChainConstant, DiscLattice, Provenance, StepRecord};
use crate::error::{Error, Result};
use crate::field::ComplexField;

/// Largest `|ω|` fed to the exponential; larger values are capped and flagged.
pub const OMEGA_CAP: f64 = 50.0;

/// Mean of `e^{2|ω|}` over `B_{r/2}(center)` against `C r^{-2CM} e^{2CM^2}`.
///
/// Returns the step record and whether the cap on `|ω|` was hit.
pub fn trudinger_exp_integral(
    omega: &ComplexField,
    center: Complex64,
    r: f64,
    m: f64,
    c: f64,
) -> Result<(StepRecord, bool)> {
    let grid = omega.grid();
    if !(r > 0.0) || !grid.contains_disc(center, r / 2.0) {
        return Err(Error::DiscOutsideDomain { center, radius: r / 2.0 });
    }
    let points = ((r / grid.spacing()).ceil() as usize).max(256);
    let lattice = DiscLattice::new(center, r / 2.0, points);
    let mut capped = false;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &z in &lattice.points {
        if let Some(w) = omega.sample_at(z) {
            let mut a = w.norm();
            if a > OMEGA_CAP {
                a = OMEGA_CAP;
                capped = true;
            }
            sum += (2.0 * a).exp();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyDisc { radius: r / 2.0, count });
    }
    let mean = sum / count as f64;
    let rhs = c * r.powf(-2.0 * c * m) * (2.0 * c * m * m).exp();
    let record = StepRecord::new(
        "exponential_factor",
        "exponential integrability of the Cauchy transform",
        Some(r),
        mean,
        rhs,
        vec![
            ChainConstant::new("C", c, Provenance::Calibrated),
            ChainConstant::new("M", m, Provenance::Measured),
        ],
    );
    Ok((record, capped))
}
