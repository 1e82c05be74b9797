use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::DiskGrid;
use super::sampled::{ComplexField, RealField};
use crate::spectral::Fft2;

/// How derivatives are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Spectral,
    CenteredDifference,
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, infinitely differentiable.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Taper profile: 1 on the domain disk, 0 beyond `1.25 R`.
pub fn taper_weight(grid: &DiskGrid, z: Complex64) -> f64 {
    let r = grid.domain_radius();
    let d = (z - grid.center()).norm();
    1.0 - smooth_step((d - r) / (0.25 * r))
}

/// Zero-extended samples multiplied by the taper profile.
pub fn tapered_samples(field: &ComplexField) -> Vec<Complex64> {
    let grid = field.grid();
    field
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if v == Complex64::default() {
                v
            } else {
                v * taper_weight(grid, grid.point_at(k))
            }
        })
        .collect()
}

/// `(d/dz, d/dzbar)` of a sampled field.
///
/// The spectral method differentiates the tapered zero extension and keeps the
/// input support; it is accurate only when the field already decays smoothly
/// to zero before its support boundary. The difference method uses centered
/// stencils, falling back to one-sided second-order stencils at the support
/// edge, and drops samples where neither fits.
pub fn wirtinger_derivatives(
    field: &ComplexField,
    method: DerivativeMethod,
) -> (ComplexField, ComplexField) {
    match method {
        DerivativeMethod::Spectral => spectral_wirtinger(field),
        DerivativeMethod::CenteredDifference => difference_wirtinger(field),
    }
}

pub fn wirtinger_real(field: &RealField, method: DerivativeMethod) -> (ComplexField, ComplexField) {
    wirtinger_derivatives(&field.to_complex(), method)
}

fn spectral_wirtinger(field: &ComplexField) -> (ComplexField, ComplexField) {
    let grid = *field.grid();
    let fft = Fft2::for_grid(&grid);
    let mut hat = tapered_samples(field);
    fft.forward(&mut hat);
    let n = grid.n_per_side();
    let mut dz = hat.clone();
    let mut dzb = hat;
    for row in 0..n {
        let xi2 = grid.frequency(row);
        for col in 0..n {
            let xi1 = grid.frequency(col);
            let k = row * n + col;
            dz[k] *= Complex64::new(0.0, 0.5) * Complex64::new(xi1, -xi2);
            dzb[k] *= Complex64::new(0.0, 0.5) * Complex64::new(xi1, xi2);
        }
    }
    fft.inverse(&mut dz);
    fft.inverse(&mut dzb);
    let mask = field.mask().to_vec();
    (
        ComplexField::new(grid, dz, mask.clone()).expect("spectral derivative is finite"),
        ComplexField::new(grid, dzb, mask).expect("spectral derivative is finite"),
    )
}

/// One-dimensional derivative along a stencil direction, `None` if the local
/// support is too thin.
fn directional(
    field: &ComplexField,
    row: usize,
    col: usize,
    dr: isize,
    dc: isize,
) -> Option<Complex64> {
    let n = field.grid().n_per_side() as isize;
    let h = field.grid().spacing();
    let at = |s: isize| -> Option<Complex64> {
        let r = row as isize + s * dr;
        let c = col as isize + s * dc;
        if r < 0 || c < 0 || r >= n || c >= n {
            None
        } else {
            field.get_rc(r as usize, c as usize)
        }
    };
    let f0 = at(0)?;
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => Some((p - m) / (2.0 * h)),
        (None, Some(p1)) => at(2).map(|p2| (-3.0 * f0 + 4.0 * p1 - p2) / (2.0 * h)),
        (Some(m1), None) => at(-2).map(|m2| (3.0 * f0 - 4.0 * m1 + m2) / (2.0 * h)),
        (None, None) => None,
    }
}

fn difference_wirtinger(field: &ComplexField) -> (ComplexField, ComplexField) {
    let grid = *field.grid();
    let n = grid.n_per_side();
    let mut dz = vec![Complex64::default(); grid.len()];
    let mut dzb = vec![Complex64::default(); grid.len()];
    let mut mask = vec![false; grid.len()];
    for row in 0..n {
        for col in 0..n {
            let k = grid.index(row, col);
            if !field.mask()[k] {
                continue;
            }
            let (Some(fx), Some(fy)) = (
                directional(field, row, col, 0, 1),
                directional(field, row, col, 1, 0),
            ) else {
                continue;
            };
            let i_fy = Complex64::i() * fy;
            dz[k] = 0.5 * (fx - i_fy);
            dzb[k] = 0.5 * (fx + i_fy);
            mask[k] = true;
        }
    }
    (
        ComplexField::new(grid, dz, mask.clone()).expect("difference derivative is finite"),
        ComplexField::new(grid, dzb, mask).expect("difference derivative is finite"),
    )
}

/// Real gradient `(v_x, v_y)` by the same difference stencils.
pub fn gradient(v: &RealField) -> (RealField, RealField) {
    let (dz, dzb) = difference_wirtinger(&v.to_complex());
    // v_x = dz + dzb, v_y = i (dz - dzb)
    let vx = dz.zip_map(&dzb, |a, b| (a + b).re).expect("same grid");
    let vy = dz
        .zip_map(&dzb, |a, b| (Complex64::i() * (a - b)).re)
        .expect("same grid");
    (vx, vy)
}
