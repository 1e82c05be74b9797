use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::line_fit;
use crate::error::{Error, Result};
use crate::field::DiscSampler;

/// Largest relative spread of `θ*(r) log(E'/r)` accepted by the fit.
pub const FIT_VARIATION_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeCircleMode {
    HolomorphicExact,
    QuasiregularFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub radii: [f64; 3],
    pub sups: [f64; 3],
    /// `log(r3/r2) / log(r3/r1)`
    pub theta: f64,
    /// `M(r2)`
    pub lhs: f64,
    /// `M(r1)^θ M(r3)^{1-θ}`
    pub rhs: f64,
    /// `(rhs - lhs) / rhs`
    pub relative_gap: f64,
    pub inequality_holds: bool,
    /// `|relative_gap| <= tolerance`
    pub equality: bool,
}

/// Hadamard's three-circle inequality with maximum moduli on closed discs.
pub fn hadamard_check(
    field: &dyn DiscSampler,
    center: Complex64,
    radii: [f64; 3],
    tolerance: f64,
) -> Result<HadamardReport> {
    let [r1, r2, r3] = radii;
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::InvalidParameter("radii must satisfy 0 < r1 < r2 < r3".into()));
    }
    let sups = [
        field.disc_samples(center, r1)?.sup(),
        field.disc_samples(center, r2)?.sup(),
        field.disc_samples(center, r3)?.sup(),
    ];
    let theta = (r3 / r2).ln() / (r3 / r1).ln();
    let lhs = sups[1];
    let rhs = sups[0].powf(theta) * sups[2].powf(1.0 - theta);
    let relative_gap = if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
    Ok(HadamardReport {
        radii,
        sups,
        theta,
        lhs,
        rhs,
        relative_gap,
        inequality_holds: lhs <= rhs * (1.0 + tolerance),
        equality: relative_gap.abs() <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeCircleFit {
    /// Length unit `u`: the discs are `B_{r/2}`, `B_u` and `B_{7u}`.
    pub unit: f64,
    pub radii: Vec<f64>,
    /// `sup_{B_u} |φ|`
    pub unit_sup: f64,
    /// `u^{-1} ||φ||_{L^2(B_{7u})}`
    pub outer_l2: f64,
    /// `(r/u)^{-1} u^{-1} ||φ||_{L^2(B_{r/2})}` per radius.
    pub inner_l2: Vec<f64>,
    /// Exponent giving equality with unit constant, per radius.
    pub theta_star: Vec<f64>,
    pub e: f64,
    pub e_prime: f64,
    /// `θ*(r) log(E'/(r/u))` per radius.
    pub products: Vec<f64>,
    /// `(max - min) / mean` of `products`.
    pub variation: f64,
    /// Some inner norm vanished while the outer one did not.
    pub infinite_order: bool,
    pub passes: bool,
}

/// Fits `θ*(r) = E / log(E'/r)` over a sweep of radii, where `θ*` makes
/// `sup_{B_1}|φ| = (r^{-1}||φ||_{L^2(B_{r/2})})^θ ||φ||_{L^2(B_7)}^{1-θ}` an
/// equality (lengths in units of `unit`).
pub fn three_circle_fit(field: &dyn DiscSampler, center: Complex64, unit: f64, radii: &[f64]) -> Result<ThreeCircleFit> {
    if radii.len() < 3 {
        return Err(Error::InvalidParameter("at least three radii are needed for a fit".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r < unit / 4.0)) {
        return Err(Error::InvalidParameter("radii must lie in (0, unit/4)".into()));
    }
    let unit_sup = field.disc_samples(center, unit)?.sup();
    let outer_l2 = field.disc_samples(center, 7.0 * unit)?.lp(2.0) / unit;
    let mut inner_l2 = Vec::new();
    let mut theta_star = Vec::new();
    let mut infinite_order = false;
    for &r in radii {
        let a = field.disc_samples(center, r / 2.0)?.lp(2.0) / r;
        inner_l2.push(a);
        if a == 0.0 {
            infinite_order = outer_l2 > 0.0;
            theta_star.push(0.0);
        } else {
            theta_star.push((outer_l2 / unit_sup).ln() / (outer_l2 / a).ln());
        }
    }
    let (mut e, mut e_prime, mut products, mut variation) = (f64::NAN, f64::NAN, Vec::new(), f64::INFINITY);
    if !infinite_order && theta_star.iter().all(|t| *t > 0.0) {
        let xs: Vec<f64> = radii.iter().map(|r| (unit / r).ln()).collect();
        let ys: Vec<f64> = theta_star.iter().map(|t| 1.0 / t).collect();
        if let Some(fit) = line_fit(&xs, &ys) {
            if fit.slope > 0.0 {
                e = 1.0 / fit.slope;
                e_prime = (fit.intercept * e).exp();
                products = radii
                    .iter()
                    .zip(&theta_star)
                    .map(|(r, t)| t * (e_prime * unit / r).ln())
                    .collect();
                let mean = products.iter().sum::<f64>() / products.len() as f64;
                let max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = products.iter().copied().fold(f64::INFINITY, f64::min);
                variation = (max - min) / mean.abs();
            }
        }
    }
    Ok(ThreeCircleFit {
        unit,
        radii: radii.to_vec(),
        unit_sup,
        outer_l2,
        inner_l2,
        theta_star,
        e,
        e_prime,
        products,
        passes: variation <= FIT_VARIATION_LIMIT,
        variation,
        infinite_order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThreeCircleReport {
    HolomorphicExact(HadamardReport),
    QuasiregularFit(ThreeCircleFit),
}

impl ThreeCircleReport {
    pub fn passes(&self) -> bool {
        match self {
            Self::HolomorphicExact(h) => h.inequality_holds,
            Self::QuasiregularFit(f) => f.passes,
        }
    }
}

/// Three-circle check at scale `r`: in exact mode the radii are
/// `(r, 4r, 24r)`; in fit mode `r` is the unit and the sweep is
/// `r·2^{-3}, ..., r·2^{-8}`, cut off where the field stops resolving `B_{r/2}`.
pub fn three_circle_check(
    field: &dyn DiscSampler,
    r: f64,
    center: Complex64,
    mode: ThreeCircleMode,
) -> Result<ThreeCircleReport> {
    match mode {
        ThreeCircleMode::HolomorphicExact => Ok(ThreeCircleReport::HolomorphicExact(hadamard_check(
            field,
            center,
            [r, 4.0 * r, 24.0 * r],
            1e-6,
        )?)),
        ThreeCircleMode::QuasiregularFit => {
            let radii: Vec<f64> = (3..=8)
                .map(|j| r * 0.5_f64.powi(j))
                .filter(|&s| s / 2.0 >= field.min_radius())
                .collect();
            Ok(ThreeCircleReport::QuasiregularFit(three_circle_fit(field, center, r, &radii)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;

    const O: Complex64 = Complex64 { re: 0.0, im: 0.0 };

    #[test]
    fn monomials_give_equality() {
        for n in 1..=5 {
            let f = AnalyticField::new(move |z| z.powu(n)).with_boundary(256);
            let h = hadamard_check(&f, O, [0.25, 1.0, 6.0], 1e-6).unwrap();
            assert!(h.equality, "{h:?}");
            assert!((h.theta - 6f64.ln() / 24f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_field_is_trivial() {
        let f = AnalyticField::new(|_| Complex64::new(2.0, 0.0));
        let h = hadamard_check(&f, O, [0.25, 1.0, 6.0], 1e-12).unwrap();
        assert!(h.equality && h.inequality_holds);
    }
}
