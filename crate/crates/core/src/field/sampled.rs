use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::grid::DiskGrid;
use crate::error::{Error, Result};

/// Scalar types that can live in a sampled field.
pub trait Sample:
    Copy
    + Default
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn modulus(self) -> f64;
    fn is_finite_sample(self) -> bool;
    fn to_complex(self) -> Complex64;
}

impl Sample for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite_sample(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Sample for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite_sample(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// A sampled function on a [`DiskGrid`] with a support mask.
///
/// Masked-out samples are stored as zero so the field is always its own zero
/// extension; accessors that respect the mask return `None` there.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Sample> {
    grid: DiskGrid,
    samples: Vec<T>,
    mask: Vec<bool>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> Field<T> {
    pub fn new(grid: DiskGrid, mut samples: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if samples.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples and {} mask entries, grid needs {}",
                samples.len(),
                mask.len(),
                grid.len()
            )));
        }
        for (k, (s, &m)) in samples.iter_mut().zip(&mask).enumerate() {
            if m {
                if !s.is_finite_sample() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite sample at index {k}"
                    )));
                }
            } else {
                *s = T::default();
            }
        }
        Ok(Self {
            grid,
            samples,
            mask,
        })
    }

    /// Samples `f` inside the domain disk; zero elsewhere.
    pub fn from_fn(grid: DiskGrid, f: impl Fn(Complex64) -> T) -> Self {
        let mask = grid.domain_mask();
        Self::from_fn_masked(grid, mask, f)
    }

    /// Samples `f` at every grid point (support = whole torus).
    pub fn from_fn_everywhere(grid: DiskGrid, f: impl Fn(Complex64) -> T) -> Self {
        Self::from_fn_masked(grid, vec![true; grid.len()], f)
    }

    pub fn from_fn_masked(grid: DiskGrid, mask: Vec<bool>, f: impl Fn(Complex64) -> T) -> Self {
        assert_eq!(mask.len(), grid.len(), "mask length must match grid");
        let samples = mask
            .iter()
            .enumerate()
            .map(|(k, &m)| if m { f(grid.point_at(k)) } else { T::default() })
            .collect();
        Self {
            grid,
            samples,
            mask,
        }
    }

    pub fn zeros(grid: DiskGrid) -> Self {
        Self {
            grid,
            samples: vec![T::default(); grid.len()],
            mask: grid.domain_mask(),
        }
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    /// Zero-extended samples, row-major.
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn into_parts(self) -> (DiskGrid, Vec<T>, Vec<bool>) {
        (self.grid, self.samples, self.mask)
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<T> {
        if self.mask[index] {
            Some(self.samples[index])
        } else {
            None
        }
    }

    #[inline]
    pub fn get_rc(&self, row: usize, col: usize) -> Option<T> {
        self.get(self.grid.index(row, col))
    }

    pub fn support_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Field<U> {
        let samples = self
            .samples
            .iter()
            .zip(&self.mask)
            .map(|(&s, &m)| if m { f(s) } else { U::default() })
            .collect();
        Field {
            grid: self.grid,
            samples,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise map with access to the sample coordinate.
    pub fn map_with_point<U: Sample>(&self, f: impl Fn(Complex64, T) -> U) -> Field<U> {
        let samples = self
            .samples
            .iter()
            .zip(&self.mask)
            .enumerate()
            .map(|(k, (&s, &m))| {
                if m {
                    f(self.grid.point_at(k), s)
                } else {
                    U::default()
                }
            })
            .collect();
        Field {
            grid: self.grid,
            samples,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise combination on the intersection of both supports.
    pub fn zip_map<S: Sample, U: Sample>(
        &self,
        other: &Field<S>,
        f: impl Fn(T, S) -> U,
    ) -> Result<Field<U>> {
        self.grid.ensure_same(&other.grid)?;
        let mask: Vec<bool> = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| a && b)
            .collect();
        let samples = (0..self.samples.len())
            .map(|k| {
                if mask[k] {
                    f(self.samples[k], other.samples[k])
                } else {
                    U::default()
                }
            })
            .collect();
        Ok(Field {
            grid: self.grid,
            samples,
            mask,
        })
    }

    /// Shrinks the support to `self.mask && mask`.
    pub fn restrict(&self, mask: &[bool]) -> Self {
        let mask: Vec<bool> = self.mask.iter().zip(mask).map(|(&a, &b)| a && b).collect();
        let samples = self
            .samples
            .iter()
            .zip(&mask)
            .map(|(&s, &m)| if m { s } else { T::default() })
            .collect();
        Self {
            grid: self.grid,
            samples,
            mask,
        }
    }

    /// Restricts the support to the open disc `B_r(center)`.
    pub fn restrict_to_disc(&self, center: Complex64, radius: f64) -> Self {
        let mask: Vec<bool> = self
            .grid
            .points()
            .map(|z| (z - center).norm() < radius)
            .collect();
        self.restrict(&mask)
    }

    /// Declares the zero extension valid everywhere on the torus.
    pub fn zero_extended(&self) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.clone(),
            mask: vec![true; self.grid.len()],
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Largest modulus over the support (0 for an empty support).
    pub fn sup_modulus(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold(0.0_f64, |acc, (s, _)| acc.max(s.modulus()))
    }

    /// Midpoint-rule `L^2` norm over the whole support.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .samples
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(s, _)| {
                let a = s.modulus();
                a * a
            })
            .sum();
        (sum * self.grid.cell_area()).sqrt()
    }

    /// Midpoint-rule `L^p` norm over the whole support, `p = inf` allowed.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_modulus();
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(s, _)| s.modulus().powf(p))
            .sum();
        (sum * self.grid.cell_area()).powf(1.0 / p)
    }

    /// Bilinear interpolation; `None` unless all four surrounding samples are
    /// in the support.
    pub fn sample_at(&self, z: Complex64) -> Option<T> {
        let (fr, fc) = self.grid.fractional_index(z);
        let n = self.grid.n_per_side();
        let (r0, c0) = (fr.floor(), fc.floor());
        if r0 < 0.0 || c0 < 0.0 {
            return None;
        }
        let (r0, c0) = (r0 as usize, c0 as usize);
        let (tr, tc) = (fr - r0 as f64, fc - c0 as f64);
        // exact hits on the last row/column do not need the far neighbour
        let r1 = if tr == 0.0 { r0 } else { r0 + 1 };
        let c1 = if tc == 0.0 { c0 } else { c0 + 1 };
        if r1 >= n || c1 >= n {
            return None;
        }
        let f00 = self.get_rc(r0, c0)?;
        let f01 = self.get_rc(r0, c1)?;
        let f10 = self.get_rc(r1, c0)?;
        let f11 = self.get_rc(r1, c1)?;
        let top = f00 * (1.0 - tc) + f01 * tc;
        let bottom = f10 * (1.0 - tc) + f11 * tc;
        Some(top * (1.0 - tr) + bottom * tr)
    }

    /// Re-samples this field onto `target` by bilinear interpolation; target
    /// samples that cannot be interpolated drop out of the support.
    pub fn resample(&self, target: &DiskGrid, mask: &[bool]) -> Field<T> {
        let mut samples = vec![T::default(); target.len()];
        let mut out_mask = vec![false; target.len()];
        for k in 0..target.len() {
            if !mask[k] {
                continue;
            }
            if let Some(v) = self.sample_at(target.point_at(k)) {
                samples[k] = v;
                out_mask[k] = true;
            }
        }
        Field {
            grid: *target,
            samples,
            mask: out_mask,
        }
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }

    pub fn abs(&self) -> RealField {
        self.map(|v| v.norm())
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    pub fn scale_complex(&self, s: Complex64) -> ComplexField {
        self.map(|v| v * s)
    }
}

/// A sampled planar vector field such as a drift `W = (W1, W2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    grid: DiskGrid,
    x: Vec<f64>,
    y: Vec<f64>,
    mask: Vec<bool>,
}

impl VectorField2 {
    pub fn new(grid: DiskGrid, x: Vec<f64>, y: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let xf = RealField::new(grid, x, mask.clone())?;
        let yf = RealField::new(grid, y, mask)?;
        Ok(Self::from_components(&xf, &yf)?)
    }

    pub fn from_components(x: &RealField, y: &RealField) -> Result<Self> {
        x.grid().ensure_same(y.grid())?;
        let mask: Vec<bool> = x
            .mask()
            .iter()
            .zip(y.mask())
            .map(|(&a, &b)| a && b)
            .collect();
        let xs = x.restrict(&mask).samples().to_vec();
        let ys = y.restrict(&mask).samples().to_vec();
        Ok(Self {
            grid: *x.grid(),
            x: xs,
            y: ys,
            mask,
        })
    }

    pub fn from_fn(grid: DiskGrid, f: impl Fn(Complex64) -> (f64, f64)) -> Self {
        let mask = grid.domain_mask();
        Self::from_fn_masked(grid, mask, f)
    }

    pub fn from_fn_everywhere(grid: DiskGrid, f: impl Fn(Complex64) -> (f64, f64)) -> Self {
        Self::from_fn_masked(grid, vec![true; grid.len()], f)
    }

    pub fn from_fn_masked(
        grid: DiskGrid,
        mask: Vec<bool>,
        f: impl Fn(Complex64) -> (f64, f64),
    ) -> Self {
        let mut x = vec![0.0; grid.len()];
        let mut y = vec![0.0; grid.len()];
        for k in 0..grid.len() {
            if mask[k] {
                let (a, b) = f(grid.point_at(k));
                x[k] = a;
                y[k] = b;
            }
        }
        Self { grid, x, y, mask }
    }

    pub fn zeros(grid: DiskGrid) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
            mask: grid.domain_mask(),
        }
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn x_component(&self) -> RealField {
        RealField {
            grid: self.grid,
            samples: self.x.clone(),
            mask: self.mask.clone(),
        }
    }

    pub fn y_component(&self) -> RealField {
        RealField {
            grid: self.grid,
            samples: self.y.clone(),
            mask: self.mask.clone(),
        }
    }

    #[inline]
    pub fn at(&self, index: usize) -> (f64, f64) {
        (self.x[index], self.y[index])
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> RealField {
        RealField {
            grid: self.grid,
            samples: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| a.hypot(*b))
                .collect(),
            mask: self.mask.clone(),
        }
    }

    /// `W1 + i W2` as a complex field.
    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            samples: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.y).all(|&v| v == 0.0)
    }

    /// Midpoint `L^q` norm of `|W|` over the support.
    pub fn lq_norm(&self, q: f64) -> f64 {
        self.magnitude().lp_norm(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> DiskGrid {
        DiskGrid::new(32, 2.0, 8.0).unwrap()
    }

    #[test]
    fn masked_out_samples_are_zero() {
        let g = grid();
        let f = RealField::from_fn(g, |_| 3.0);
        for k in 0..g.len() {
            if f.mask()[k] {
                assert_eq!(f.samples()[k], 3.0);
            } else {
                assert_eq!(f.samples()[k], 0.0);
                assert_eq!(f.get(k), None);
            }
        }
    }

    #[test]
    fn new_rejects_non_finite_support_samples() {
        let g = grid();
        let mut s = vec![0.0; g.len()];
        let mask = g.domain_mask();
        let k = mask.iter().position(|&m| m).unwrap();
        s[k] = f64::NAN;
        assert!(RealField::new(g, s.clone(), mask.clone()).is_err());
        // NaN outside the support is tolerated and zeroed
        let mut s = vec![0.0; g.len()];
        s[0] = f64::NAN;
        let f = RealField::new(g, s, mask).unwrap();
        assert_eq!(f.samples()[0], 0.0);
    }

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let g = grid();
        let f = RealField::from_fn_everywhere(g, |z| 1.0 + 2.0 * z.re - 0.5 * z.im);
        for z in [
            Complex64::new(0.13, -0.71),
            Complex64::new(-1.2, 0.05),
            Complex64::new(0.0, 0.0),
        ] {
            let v = f.sample_at(z).unwrap();
            assert!((v - (1.0 + 2.0 * z.re - 0.5 * z.im)).abs() < 1e-13);
        }
    }

    #[test]
    fn zip_map_intersects_supports() {
        let g = grid();
        let a = RealField::from_fn(g, |_| 1.0);
        let b = RealField::from_fn_everywhere(g, |_| 2.0)
            .restrict_to_disc(Complex64::new(0.0, 0.0), 1.0);
        let c = a.zip_map(&b, |x, y| x + y).unwrap();
        assert_eq!(c.support_count(), b.support_count());
        assert!(c.samples().iter().all(|&v| v == 0.0 || v == 3.0));
    }
}
