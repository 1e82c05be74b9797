//! Problems with known solutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BoundaryData, PLaplaceProblem, Region};
use crate::error::{Error, Result};
use crate::field::{DiskGrid, RealField, VectorField2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ManufacturedKind {
    /// `v = x`, no drift.
    Affine,
    /// `v = Re z^N`, no drift; p-harmonic only for `p = 2` (or `N = 1`).
    HarmonicMonomial { degree: u32 },
    /// `v = |z|^{(p-2)/(p-1)}` (`log|z|` for `p = 2`) on `inner < |z| < R`.
    Radial { inner: f64 },
    /// A smooth perturbation of `x` with a drift parallel to its gradient.
    Drifted,
}

/// Smooth profile used by [`ManufacturedKind::Drifted`], with derivatives.
#[derive(Debug, Clone, Copy)]
pub struct DriftProfile;

impl DriftProfile {
    pub fn value(z: Complex64) -> f64 {
        let (x, y) = (z.re, z.im);
        x + 0.01 * (x * x - y * y) + 0.005 * x * y + 0.02 * (0.7 * y).sin()
    }

    pub fn gradient(z: Complex64) -> (f64, f64) {
        let (x, y) = (z.re, z.im);
        (
            1.0 + 0.02 * x + 0.005 * y,
            -0.02 * y + 0.005 * x + 0.014 * (0.7 * y).cos(),
        )
    }

    /// `(v_xx, v_xy, v_yy)`
    pub fn hessian(z: Complex64) -> (f64, f64, f64) {
        (0.02, 0.005, -0.02 - 0.0098 * (0.7 * z.im).sin())
    }

    /// The drift `λ∇v` with `λ |∇v|^p = -div(|∇v|^{p-2}∇v)`, zero where
    /// `|∇v| < threshold`.
    pub fn drift(z: Complex64, p: f64, threshold: f64) -> (f64, f64) {
        let (gx, gy) = Self::gradient(z);
        let g2 = gx * gx + gy * gy;
        if g2.sqrt() < threshold {
            return (0.0, 0.0);
        }
        let (hxx, hxy, hyy) = Self::hessian(z);
        let lap = hxx + hyy;
        let quad = gx * gx * hxx + 2.0 * gx * gy * hxy + gy * gy * hyy;
        let lambda = -(lap + (p - 2.0) * quad / g2) / g2;
        (lambda * gx, lambda * gy)
    }
}

/// Regularization cap for the drifted fixture, keeping the drift threshold
/// `10ε` below the minimum gradient of the profile on `|z| < 8`.
pub const DRIFTED_EPSILON: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ManufacturedInstance {
    pub kind: ManufacturedKind,
    pub problem: PLaplaceProblem,
    pub reference: RealField,
}

pub fn manufactured_instance(
    kind: ManufacturedKind,
    p: f64,
    grid: DiskGrid,
) -> Result<ManufacturedInstance> {
    let c = grid.center();
    let zero = VectorField2::zeros(grid);
    let everywhere = vec![true; grid.len()];
    let (problem, reference) = match kind {
        ManufacturedKind::Affine => {
            let f = move |z: Complex64| (z - c).re;
            let prob = PLaplaceProblem::drift(grid, p, zero, BoundaryData::analytic(f), None)?;
            (prob, RealField::from_fn_masked(grid, everywhere, f))
        }
        ManufacturedKind::HarmonicMonomial { degree } => {
            if degree == 0 {
                return Err(Error::InvalidParameter(
                    "monomial degree must be positive".into(),
                ));
            }
            let f = move |z: Complex64| (z - c).powu(degree).re;
            let prob = PLaplaceProblem::drift(grid, p, zero, BoundaryData::analytic(f), None)?;
            (prob, RealField::from_fn_masked(grid, everywhere, f))
        }
        ManufacturedKind::Radial { inner } => {
            if !(inner > 0.0) {
                return Err(Error::InvalidParameter(
                    "radial solution is singular at the center; an annulus with positive inner radius is required".into(),
                ));
            }
            let f = move |z: Complex64| {
                let r = (z - c).norm();
                if (p - 2.0).abs() < 1e-14 {
                    r.ln()
                } else {
                    r.powf((p - 2.0) / (p - 1.0))
                }
            };
            let mask: Vec<bool> = grid
                .points()
                .map(|z| (z - c).norm() > 0.5 * inner)
                .collect();
            let prob = PLaplaceProblem::drift(grid, p, zero, BoundaryData::analytic(f), None)?
                .with_region(Region::Annulus { inner })?;
            (prob, RealField::from_fn_masked(grid, mask, f))
        }
        ManufacturedKind::Drifted => {
            if !(p > 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "exponent p = {p} must exceed 1"
                )));
            }
            let epsilon = grid.spacing().min(DRIFTED_EPSILON);
            let threshold = 10.0 * epsilon;
            let w = VectorField2::from_fn_everywhere(grid, |z| {
                DriftProfile::drift(z - c, p, threshold)
            });
            let f = move |z: Complex64| DriftProfile::value(z - c);
            let prob =
                PLaplaceProblem::drift(grid, p, w, BoundaryData::analytic(f), Some(epsilon))?;
            (prob, RealField::from_fn_masked(grid, everywhere, f))
        }
    };
    Ok(ManufacturedInstance {
        kind,
        problem,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_profile_derivatives_match_differences() {
        let z = Complex64::new(0.7, -1.3);
        let h = 1e-5;
        let dx = (DriftProfile::value(z + h) - DriftProfile::value(z - h)) / (2.0 * h);
        let dy = (DriftProfile::value(z + Complex64::new(0.0, h))
            - DriftProfile::value(z - Complex64::new(0.0, h)))
            / (2.0 * h);
        let (gx, gy) = DriftProfile::gradient(z);
        assert!((dx - gx).abs() < 1e-9 && (dy - gy).abs() < 1e-9);
        let gyy = (DriftProfile::gradient(z + Complex64::new(0.0, h)).1
            - DriftProfile::gradient(z - Complex64::new(0.0, h)).1)
            / (2.0 * h);
        assert!((gyy - DriftProfile::hessian(z).2).abs() < 1e-8);
    }

    #[test]
    fn radial_requires_positive_inner_radius() {
        let g = DiskGrid::new(32, 4.0, 16.0).unwrap();
        assert!(manufactured_instance(ManufacturedKind::Radial { inner: 0.0 }, 3.0, g).is_err());
    }
}
