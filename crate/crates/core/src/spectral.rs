//! Two-dimensional FFT on the periodic embedding square.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::DiskGrid;

/// Forward/inverse 2D transform pair for an `n x n` row-major array.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn for_grid(grid: &DiskGrid) -> Self {
        Self::new(grid.n_per_side())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform including the `1/n^2` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer does not match transform size");
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Applies a Fourier multiplier `m(xi_1, xi_2)` to `data` in place.
    pub fn apply_multiplier(
        &self,
        grid: &DiskGrid,
        data: &mut [Complex64],
        multiplier: impl Fn(f64, f64) -> Complex64,
    ) {
        self.forward(data);
        let n = self.n;
        for row in 0..n {
            let xi2 = grid.frequency(row);
            for col in 0..n {
                data[row * n + col] *= multiplier(grid.frequency(col), xi2);
            }
        }
        self.inverse(data);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let fft = Fft2::new(16);
        let orig: Vec<Complex64> = (0..256)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let n = 16;
        let fft = Fft2::new(n);
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (r, c) = (k / n, k % n);
                let phase =
                    2.0 * std::f64::consts::PI * (3.0 * c as f64 + 2.0 * r as f64) / n as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        fft.forward(&mut data);
        for (k, v) in data.iter().enumerate() {
            let expected = if k == 2 * n + 3 { (n * n) as f64 } else { 0.0 };
            assert!((v.norm() - expected).abs() < 1e-9, "bin {k}");
        }
    }
}
