//! Three-circle inequalities, Harnack and Hölder estimates, and vanishing
//! order for sampled and closed-form maps.

mod three_circle;
mod vanishing;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DiscSampler;

pub use three_circle::{
    hadamard_check, three_circle_check, three_circle_fit, HadamardReport, ThreeCircleFit, ThreeCircleMode,
    ThreeCircleReport, FIT_VARIATION_LIMIT,
};
pub use vanishing::{vanishing_order_fit, VanishingOrderFit, VanishingVerdict, CIRCLE_POINTS, MIN_FIT_RADII};

/// Sup and `L^2` norms of a field on concentric discs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusNorms {
    pub center: Complex64,
    pub radii: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub l2_norms: Vec<f64>,
}

pub fn annulus_norms(field: &dyn DiscSampler, center: Complex64, radii: &[f64]) -> Result<AnnulusNorms> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    let mut sup_norms = Vec::with_capacity(radii.len());
    let mut l2_norms = Vec::with_capacity(radii.len());
    for &r in radii {
        let s = field.disc_samples(center, r)?;
        sup_norms.push(s.sup());
        l2_norms.push(s.lp(2.0));
    }
    Ok(AnnulusNorms {
        center,
        radii: radii.to_vec(),
        sup_norms,
        l2_norms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub radius: f64,
    /// `sup_{B_{r/2}} |φ|`
    pub inner_sup: f64,
    /// Mean of `|φ|` over `B_r`.
    pub outer_mean: f64,
    pub ratio: f64,
    pub budget: f64,
    pub passes: bool,
}

/// Measures `sup_{B_{r/2}} |φ| / mean_{B_r} |φ|` against a budget.
pub fn upper_harnack_check(field: &dyn DiscSampler, r: f64, center: Complex64, budget: f64) -> Result<HarnackReport> {
    let inner_sup = field.disc_samples(center, r / 2.0)?.sup();
    let outer_mean = field.disc_samples(center, r)?.mean_abs();
    let ratio = if inner_sup == 0.0 { 0.0 } else { inner_sup / outer_mean };
    Ok(HarnackReport {
        radius: r,
        inner_sup,
        outer_mean,
        ratio,
        budget,
        passes: ratio <= budget,
    })
}

/// Relative slack for round-off in the bi-Hölder comparisons.
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub alpha: f64,
    pub c0: f64,
    pub pairs: usize,
    /// Pairs with `|f(x) - f(y)| > C0 |x - y|^α`.
    pub upper_violations: usize,
    /// Pairs with `|f(x) - f(y)| < C0^{-1} |x - y|^{1/α}`.
    pub lower_violations: usize,
    /// Smallest `C0` for which every sampled pair satisfies both bounds.
    pub measured_c0: f64,
    pub passes: bool,
}

/// Samples `pairs` random pairs from the disc `B_radius(center)` (seeded,
/// reproducible) and checks the bi-Hölder bounds.
pub fn holder_check_qc(
    map: &dyn DiscSampler,
    center: Complex64,
    radius: f64,
    alpha: f64,
    c0: f64,
    pairs: usize,
    seed: u64,
) -> Result<HolderReport> {
    if !(alpha > 0.0 && alpha <= 1.0 && c0 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < alpha <= 1 and C0 >= 1 (got {alpha}, {c0})"
        )));
    }
    let pts = map.disc_samples(center, radius)?.interior;
    if pts.len() < 2 {
        return Err(Error::EmptyDisc {
            radius,
            count: pts.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut up, mut low) = (0, 0);
    let mut measured: f64 = 1.0;
    let mut done = 0;
    while done < pairs {
        let i = rng.gen_range(0..pts.len());
        let j = rng.gen_range(0..pts.len());
        if i == j {
            continue;
        }
        done += 1;
        let d = (pts[i].0 - pts[j].0).norm();
        let df = (pts[i].1 - pts[j].1).norm();
        let upper = d.powf(alpha);
        let lower = d.powf(1.0 / alpha);
        if df > c0 * upper * (1.0 + ROUNDOFF) {
            up += 1;
        }
        if df * c0 * (1.0 + ROUNDOFF) < lower {
            low += 1;
        }
        measured = measured.max(df / upper);
        measured = measured.max(if df > 0.0 { lower / df } else { f64::INFINITY });
    }
    Ok(HolderReport {
        alpha,
        c0,
        pairs,
        upper_violations: up,
        lower_violations: low,
        measured_c0: measured,
        passes: up == 0 && low == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;

    #[test]
    fn annulus_norms_of_identity() {
        let f = AnalyticField::new(|z| z).with_boundary(64);
        let a = annulus_norms(&f, Complex64::default(), &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(a.sup_norms, vec![0.5, 1.0, 2.0]);
        assert!(annulus_norms(&f, Complex64::default(), &[1.0, 1.0]).is_err());
    }
}
