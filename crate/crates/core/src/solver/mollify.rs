//! Smooth approximation of a drift by convolution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{DiskGrid, VectorField2};
use crate::spectral::Fft2;

/// Unnormalized `C^2` bump profile on the unit disk.
fn bump(s: f64) -> f64 {
    if s < 1.0 {
        let t = 1.0 - s * s;
        t * t * t
    } else {
        0.0
    }
}

/// `L^1` norm of the gradient of the unit-mass bump of radius `epsilon`.
pub fn bump_gradient_l1(epsilon: f64) -> f64 {
    // (4/π) ∫ |d/dr (1-r²)³| 2πr dr = 384/105
    384.0 / (105.0 * epsilon)
}

/// Kernel samples on the periodic grid, centered at index 0, unit discrete mass.
fn kernel(grid: &DiskGrid, epsilon: f64) -> Vec<Complex64> {
    let n = grid.n_per_side();
    let h = grid.spacing();
    let wrap = |k: usize| {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let mut out = vec![Complex64::default(); grid.len()];
    let mut mass = 0.0;
    for r in 0..n {
        for c in 0..n {
            let d = (wrap(r) * h).hypot(wrap(c) * h);
            let v = bump(d / epsilon);
            out[r * n + c] = Complex64::new(v, 0.0);
            mass += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= mass);
    out
}

fn convolve(fft: &Fft2, kernel_hat: &[Complex64], mut data: Vec<Complex64>) -> Vec<Complex64> {
    fft.forward(&mut data);
    data.iter_mut().zip(kernel_hat).for_each(|(d, k)| *d *= k);
    fft.inverse(&mut data);
    data
}

/// Componentwise convolution of the zero extension of `w` with a normalized
/// bump of radius `epsilon`. The result is supported on the points within
/// `epsilon` of the input support.
pub fn mollify_drift(w: &VectorField2, epsilon: f64) -> Result<VectorField2> {
    let grid = *w.grid();
    if !(epsilon >= 2.0 * grid.spacing()) {
        return Err(Error::InvalidParameter(format!(
            "mollification radius {epsilon} is below twice the spacing {}",
            grid.spacing()
        )));
    }
    let fft = Fft2::for_grid(&grid);
    let mut k = kernel(&grid, epsilon);
    fft.forward(&mut k);
    let values = convolve(&fft, &k, w.to_complex().samples().to_vec());
    let indicator: Vec<Complex64> = w
        .mask()
        .iter()
        .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let cover = convolve(&fft, &k, indicator);
    let mask: Vec<bool> = cover.iter().map(|c| c.re > 1e-9).collect();
    let x = values.iter().map(|v| v.re).collect();
    let y = values.iter().map(|v| v.im).collect();
    VectorField2::new(grid, x, y, mask)
}

/// Largest `|W(a) - W(b)| / |a - b|` over neighboring support points.
pub fn discrete_lipschitz(w: &VectorField2) -> f64 {
    let grid = w.grid();
    let n = grid.n_per_side();
    let h = grid.spacing();
    let mask = w.mask();
    let mut best: f64 = 0.0;
    for k in 0..grid.len() {
        if !mask[k] {
            continue;
        }
        let (r, c) = grid.row_col(k);
        let (a1, a2) = w.at(k);
        for j in [(c + 1 < n).then(|| k + 1), (r + 1 < n).then(|| k + n)]
            .into_iter()
            .flatten()
        {
            if mask[j] {
                let (b1, b2) = w.at(j);
                best = best.max((a1 - b1).hypot(a2 - b2) / h);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_norm_formula_matches_quadrature() {
        let m = 200_000;
        let mut s = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) / m as f64;
            s += 6.0 * r * (1.0 - r * r).powi(2) * 2.0 * std::f64::consts::PI * r / m as f64;
        }
        assert!((4.0 / std::f64::consts::PI * s - bump_gradient_l1(1.0)).abs() < 1e-8);
    }

    #[test]
    fn rejects_subresolution_radius() {
        let g = DiskGrid::new(32, 2.0, 8.0).unwrap();
        assert!(mollify_drift(&VectorField2::zeros(g), g.spacing()).is_err());
    }
}
