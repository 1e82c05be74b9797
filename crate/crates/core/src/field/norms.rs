use num_complex::Complex64;

use super::sampled::{Field, Sample};
use crate::error::{Error, Result};

/// Minimum number of samples a disc must contain.
pub const MIN_DISC_SAMPLES: usize = 4;

/// Samples of a field restricted to a disc, ready for quadrature.
///
/// `interior` holds `(point, value)` pairs strictly inside the disc, each
/// carrying weight `cell_area`. `boundary` holds extra values on the boundary
/// circle that only take part in suprema (analytic fixtures use them so that
/// the maximum over the closed disc is seen exactly).
#[derive(Debug, Clone, Default)]
pub struct DiscSamples {
    pub cell_area: f64,
    pub interior: Vec<(Complex64, Complex64)>,
    pub boundary: Vec<Complex64>,
}

impl DiscSamples {
    pub fn sup(&self) -> f64 {
        self.interior
            .iter()
            .map(|(_, v)| v.norm())
            .chain(self.boundary.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }

    /// Midpoint-rule `∫ g(z, value)`.
    pub fn integral(&self, g: impl Fn(Complex64, Complex64) -> f64) -> f64 {
        self.interior.iter().map(|&(z, v)| g(z, v)).sum::<f64>() * self.cell_area
    }

    pub fn lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup();
        }
        self.integral(|_, v| v.norm().powf(p)).powf(1.0 / p)
    }

    pub fn measure(&self) -> f64 {
        self.interior.len() as f64 * self.cell_area
    }

    /// Mean of `|value|` over the sampled disc.
    pub fn mean_abs(&self) -> f64 {
        self.integral(|_, v| v.norm()) / self.measure()
    }

    /// Values shifted by a constant (used for `v - v(center)`).
    pub fn shifted(mut self, c: Complex64) -> Self {
        self.interior.iter_mut().for_each(|(_, v)| *v -= c);
        self.boundary.iter_mut().for_each(|v| *v -= c);
        self
    }
}

/// Anything that can report its samples on a disc.
pub trait DiscSampler {
    fn disc_samples(&self, center: Complex64, radius: f64) -> Result<DiscSamples>;

    /// Smallest radius whose disc is resolved well enough for sup-norm fits.
    fn min_radius(&self) -> f64 {
        0.0
    }

    /// Value at a point (used to subtract `v(center)`).
    fn value_at(&self, z: Complex64) -> Option<Complex64>;

    fn disc_norm(&self, p: f64, radius: f64, center: Complex64) -> Result<f64> {
        Ok(self.disc_samples(center, radius)?.lp(p))
    }
}

impl<T: Sample> DiscSampler for Field<T> {
    fn disc_samples(&self, center: Complex64, radius: f64) -> Result<DiscSamples> {
        let grid = self.grid();
        if !(radius > 0.0) || !grid.contains_disc(center, radius) {
            return Err(Error::DiscOutsideDomain { center, radius });
        }
        let interior: Vec<(Complex64, Complex64)> = grid
            .disc_indices(center, radius)
            .into_iter()
            .filter_map(|k| self.get(k).map(|v| (grid.point_at(k), v.to_complex())))
            .collect();
        if interior.len() < MIN_DISC_SAMPLES {
            return Err(Error::EmptyDisc {
                radius,
                count: interior.len(),
            });
        }
        Ok(DiscSamples {
            cell_area: grid.cell_area(),
            interior,
            boundary: Vec::new(),
        })
    }

    fn min_radius(&self) -> f64 {
        4.0 * self.grid().spacing()
    }

    fn value_at(&self, z: Complex64) -> Option<Complex64> {
        let (r, c) = self.grid().nearest(z)?;
        if (self.grid().point(r, c) - z).norm() < 1e-9 * self.grid().spacing() {
            self.get_rc(r, c).map(Sample::to_complex)
        } else {
            self.sample_at(z).map(Sample::to_complex)
        }
    }
}

/// `L^p` norm (midpoint quadrature) or sup norm (`p = inf`) over the open
/// disc `B_r(center)`, using masked-in samples in row-major order.
pub fn norm_on_disc<T: Sample>(
    field: &Field<T>,
    p: f64,
    radius: f64,
    center: Complex64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent {p} must be at least 1"
        )));
    }
    field.disc_norm(p, radius, center)
}

/// A closed-form field sampled on demand, resolving every disc with the same
/// number of points per radius.
pub struct AnalyticField {
    f: Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    points_per_radius: usize,
    boundary_points: usize,
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("points_per_radius", &self.points_per_radius)
            .field("boundary_points", &self.boundary_points)
            .finish()
    }
}

impl AnalyticField {
    pub fn new(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            f: Box::new(f),
            points_per_radius: 48,
            boundary_points: 0,
        }
    }

    pub fn real(f: impl Fn(Complex64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |z| Complex64::new(f(z), 0.0))
    }

    pub fn with_resolution(mut self, points_per_radius: usize) -> Self {
        self.points_per_radius = points_per_radius.max(2);
        self
    }

    /// Adds equispaced samples on the boundary circle to every supremum.
    pub fn with_boundary(mut self, points: usize) -> Self {
        self.boundary_points = points;
        self
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.f)(z)
    }
}

impl DiscSampler for AnalyticField {
    fn disc_samples(&self, center: Complex64, radius: f64) -> Result<DiscSamples> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::DiscOutsideDomain { center, radius });
        }
        let m = self.points_per_radius as isize;
        let h = radius / m as f64;
        let mut interior = Vec::new();
        for j in -m..=m {
            for i in -m..=m {
                let d = Complex64::new(i as f64 * h, j as f64 * h);
                if d.norm() < radius {
                    let z = center + d;
                    interior.push((z, self.eval(z)));
                }
            }
        }
        let boundary = (0..self.boundary_points)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / self.boundary_points as f64;
                self.eval(center + Complex64::from_polar(radius, t))
            })
            .collect();
        Ok(DiscSamples {
            cell_area: h * h,
            interior,
            boundary,
        })
    }

    fn value_at(&self, z: Complex64) -> Option<Complex64> {
        Some(self.eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ComplexField, DiskGrid, RealField};

    fn grid() -> DiskGrid {
        DiskGrid::new(256, 8.0, 32.0).unwrap()
    }

    const O: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    #[test]
    fn constant_sup_is_one() {
        let f = RealField::from_fn(grid(), |_| 1.0);
        assert_eq!(
            norm_on_disc(&f, f64::INFINITY, 3.0, Complex64::new(1.0, 1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn modulus_sup_within_one_spacing() {
        let f = RealField::from_fn(grid(), |z| z.norm());
        let s = norm_on_disc(&f, f64::INFINITY, 1.0, O).unwrap();
        assert!(s < 1.0 && s > 1.0 - grid().spacing());
    }

    #[test]
    fn area_of_radius_two() {
        let f = RealField::from_fn(grid(), |_| 1.0);
        let v = norm_on_disc(&f, 2.0, 2.0, O).unwrap();
        let exact = (4.0 * std::f64::consts::PI).sqrt();
        assert!((v / exact - 1.0).abs() < 0.01);
    }

    #[test]
    fn errors_for_escaping_and_tiny_discs() {
        let f = RealField::from_fn(grid(), |_| 1.0);
        assert!(matches!(
            norm_on_disc(&f, 2.0, 2.0, Complex64::new(7.0, 0.0)),
            Err(Error::DiscOutsideDomain { .. })
        ));
        assert!(matches!(
            norm_on_disc(&f, 2.0, 0.1, O),
            Err(Error::EmptyDisc { count: 1, .. })
        ));
    }

    #[test]
    fn sup_is_phase_invariant() {
        let f = ComplexField::from_fn(grid(), |z| z * z + 1.0);
        let g = f.scale_complex(Complex64::from_polar(1.0, 0.7));
        let a = norm_on_disc(&f, f64::INFINITY, 2.0, O).unwrap();
        let b = norm_on_disc(&g, f64::INFINITY, 2.0, O).unwrap();
        assert!((a - b).abs() < 1e-14 * a);
        assert_eq!(a, norm_on_disc(&f.abs(), f64::INFINITY, 2.0, O).unwrap());
    }

    #[test]
    fn analytic_field_sees_boundary_maximum() {
        let f = AnalyticField::new(|z| z * z * z).with_boundary(64);
        let s = f.disc_norm(f64::INFINITY, 0.5, O).unwrap();
        assert!((s - 0.125).abs() < 1e-15);
    }
}
