use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling of a centered disk embedded in a periodic square.
///
/// Sample `(row, col)` sits at `center + ((col - n/2) + i (row - n/2)) * spacing`,
/// so the center itself is always a grid point. Samples are stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    n_per_side: usize,
    domain_radius: f64,
    embed_side: f64,
    spacing: f64,
    center: Complex64,
}

impl DiskGrid {
    pub const MIN_SIDE: usize = 16;

    /// Grid centered at the origin. `n_per_side` must be a power of two (at
    /// least 16) and the embedding square must be at least four domain radii
    /// wide so periodic convolutions do not alias the disk.
    pub fn new(n_per_side: usize, domain_radius: f64, embed_side: f64) -> Result<Self> {
        Self::with_center(
            n_per_side,
            domain_radius,
            embed_side,
            Complex64::new(0.0, 0.0),
        )
    }

    pub fn with_center(
        n_per_side: usize,
        domain_radius: f64,
        embed_side: f64,
        center: Complex64,
    ) -> Result<Self> {
        if n_per_side < Self::MIN_SIDE {
            return Err(Error::InvalidGrid(format!(
                "n_per_side {n_per_side} is below the minimum {}",
                Self::MIN_SIDE
            )));
        }
        if !n_per_side.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_per_side {n_per_side} is not a power of two"
            )));
        }
        if !(domain_radius > 0.0 && domain_radius.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain radius {domain_radius} must be positive"
            )));
        }
        if !(embed_side.is_finite() && embed_side >= 4.0 * domain_radius) {
            return Err(Error::InvalidGrid(format!(
                "embedding side {embed_side} is below 4 x domain radius {domain_radius}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidGrid("center must be finite".into()));
        }
        Ok(Self {
            n_per_side,
            domain_radius,
            embed_side,
            spacing: embed_side / n_per_side as f64,
            center,
        })
    }

    /// The same sample layout shrunk by `factor` about the center.
    pub fn zoomed(&self, factor: f64) -> Result<Self> {
        Self::with_center(
            self.n_per_side,
            self.domain_radius * factor,
            self.embed_side * factor,
            self.center,
        )
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn embed_side(&self) -> f64 {
        self.embed_side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Area of one sample cell.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_per_side * self.n_per_side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_per_side + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_per_side, index % self.n_per_side)
    }

    #[inline]
    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        let half = (self.n_per_side / 2) as f64;
        self.center
            + Complex64::new(
                (col as f64 - half) * self.spacing,
                (row as f64 - half) * self.spacing,
            )
    }

    #[inline]
    pub fn point_at(&self, index: usize) -> Complex64 {
        let (r, c) = self.row_col(index);
        self.point(r, c)
    }

    /// Iterator over all sample coordinates in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |k| self.point_at(k))
    }

    /// Fractional (row, col) coordinates of a point.
    pub fn fractional_index(&self, z: Complex64) -> (f64, f64) {
        let half = (self.n_per_side / 2) as f64;
        let d = z - self.center;
        (d.im / self.spacing + half, d.re / self.spacing + half)
    }

    /// Nearest sample to `z`, if it lies on the grid.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, usize)> {
        let (fr, fc) = self.fractional_index(z);
        let (r, c) = (fr.round(), fc.round());
        let n = self.n_per_side as f64;
        if r < 0.0 || c < 0.0 || r >= n || c >= n {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Membership rule for the domain disk: strict inequality `|z - center| < R`.
    #[inline]
    pub fn in_domain(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.domain_radius
    }

    pub fn domain_mask(&self) -> Vec<bool> {
        self.points().map(|z| self.in_domain(z)).collect()
    }

    /// Whether the closed disc `B_r(center)` lies inside the closed domain disk.
    pub fn contains_disc(&self, center: Complex64, radius: f64) -> bool {
        (center - self.center).norm() + radius <= self.domain_radius * (1.0 + 1e-12)
    }

    /// Indices of samples strictly inside `B_r(center)`.
    pub fn disc_indices(&self, center: Complex64, radius: f64) -> Vec<usize> {
        let h = self.spacing;
        let n = self.n_per_side as isize;
        let (fr, fc) = self.fractional_index(center);
        let span = (radius / h).ceil() as isize + 1;
        let r0 = (fr.floor() as isize - span).max(0);
        let r1 = (fr.ceil() as isize + span).min(n - 1);
        let c0 = (fc.floor() as isize - span).max(0);
        let c1 = (fc.ceil() as isize + span).min(n - 1);
        let mut out = Vec::new();
        if r0 > r1 || c0 > c1 {
            return out;
        }
        for r in r0..=r1 {
            for c in c0..=c1 {
                let z = self.point(r as usize, c as usize);
                if (z - center).norm() < radius {
                    out.push(self.index(r as usize, c as usize));
                }
            }
        }
        out
    }

    /// Angular frequency of FFT bin `k` along one axis, bins ordered
    /// `0, 1, .., n/2 - 1, -n/2, .., -1`.
    #[inline]
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n_per_side as isize;
        let signed = if (k as isize) < n / 2 {
            k as isize
        } else {
            k as isize - n
        };
        2.0 * std::f64::consts::PI * signed as f64 / self.embed_side
    }

    /// Bitwise identity of all layout parameters.
    pub fn same_layout(&self, other: &DiskGrid) -> bool {
        self.n_per_side == other.n_per_side
            && self.domain_radius.to_bits() == other.domain_radius.to_bits()
            && self.embed_side.to_bits() == other.embed_side.to_bits()
            && self.center.re.to_bits() == other.center.re.to_bits()
            && self.center.im.to_bits() == other.center.im.to_bits()
    }

    pub fn ensure_same(&self, other: &DiskGrid) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_embedding() {
        let g = DiskGrid::new(256, 8.0, 32.0).unwrap();
        assert_eq!(g.spacing(), 0.125);
        let g = DiskGrid::new(16, 1.0, 4.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(matches!(
            DiskGrid::new(100, 8.0, 32.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            DiskGrid::new(8, 1.0, 4.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            DiskGrid::new(64, 8.0, 31.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(DiskGrid::new(64, -1.0, 31.0).is_err());
    }

    #[test]
    fn center_is_a_sample() {
        let g = DiskGrid::with_center(64, 2.0, 8.0, Complex64::new(0.5, -1.0)).unwrap();
        assert_eq!(g.point(32, 32), Complex64::new(0.5, -1.0));
        assert_eq!(g.nearest(Complex64::new(0.5, -1.0)), Some((32, 32)));
    }

    #[test]
    fn disc_indices_use_strict_membership() {
        let g = DiskGrid::new(64, 4.0, 16.0).unwrap();
        let h = g.spacing();
        // radius exactly 2h: the four axis points at distance 2h are excluded
        let idx = g.disc_indices(Complex64::new(0.0, 0.0), 2.0 * h);
        assert_eq!(idx.len(), 9);
        let brute = g.points().filter(|z| z.norm() < 2.0 * h).count();
        assert_eq!(brute, idx.len());
    }

    #[test]
    fn frequencies_are_signed() {
        let g = DiskGrid::new(16, 1.0, 4.0).unwrap();
        let two_pi_over_l = 2.0 * std::f64::consts::PI / 4.0;
        assert_eq!(g.frequency(1), two_pi_over_l);
        assert_eq!(g.frequency(8), -8.0 * two_pi_over_l);
        assert_eq!(g.frequency(15), -two_pi_over_l);
    }
}
