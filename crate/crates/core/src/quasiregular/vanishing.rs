use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::line_fit;
use crate::error::{Error, Result};
use crate::field::DiscSampler;

/// Fewest dyadic radii accepted by [`vanishing_order_fit`].
pub const MIN_FIT_RADII: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum VanishingVerdict {
    FiniteOrder { beta: f64 },
    ExceedsNMax { local_slope: f64 },
    IdenticallyConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingOrderFit {
    pub center_value: Complex64,
    /// Decreasing dyadic radii `r_max, r_max/2, ...`.
    pub radii: Vec<f64>,
    /// `||v - v(center)||_{L^∞}` over the closed disc of radius `r`.
    pub norms: Vec<f64>,
    /// Slope of `log norm` against `log r` over all radii.
    pub beta: f64,
    pub residual: f64,
    /// Slope over the smallest decade `[r_min, 10 r_min]`.
    pub local_slope: f64,
    pub n_max: f64,
    pub verdict: VanishingVerdict,
}

pub fn vanishing_order_fit(
    v: &dyn DiscSampler,
    center: Complex64,
    r_min: f64,
    r_max: f64,
    n_max: f64,
) -> Result<VanishingOrderFit> {
    if r_min < v.min_radius() {
        return Err(Error::InvalidParameter(format!(
            "r_min = {r_min} is below the resolved radius {}",
            v.min_radius()
        )));
    }
    let mut radii = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        radii.push(r);
        r /= 2.0;
    }
    if radii.len() < MIN_FIT_RADII {
        return Err(Error::InvalidParameter(format!(
            "only {} dyadic radii in [{r_min}, {r_max}]; need {MIN_FIT_RADII}",
            radii.len()
        )));
    }
    let center_value = v
        .value_at(center)
        .ok_or_else(|| Error::InvalidParameter("center is not sampled".into()))?;
    let mut norms = Vec::with_capacity(radii.len());
    for &r in &radii {
        let inner = v.disc_samples(center, r)?.shifted(center_value).sup();
        norms.push(inner.max(circle_sup(v, center, r, center_value)));
    }
    let floor = 10.0 * f64::EPSILON * center_value.norm().max(1.0);
    let base = FitSummary {
        center_value,
        beta: f64::NAN,
        residual: f64::NAN,
        local_slope: f64::NAN,
        n_max,
    };
    if norms.iter().all(|&n| n <= floor) {
        return Ok(base.finish(radii, norms, VanishingVerdict::IdenticallyConstant));
    }
    let resolved: Vec<usize> = (0..radii.len()).filter(|&i| norms[i] > floor).collect();
    let xs: Vec<f64> = resolved.iter().map(|&i| radii[i].ln()).collect();
    let ys: Vec<f64> = resolved.iter().map(|&i| norms[i].ln()).collect();
    let fit = line_fit(&xs, &ys);
    let smallest = *radii.last().expect("non-empty");
    let local: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= 10.0 * smallest).collect();
    let local_slope = if local.iter().any(|&i| norms[i] <= floor) {
        f64::INFINITY
    } else {
        let lx: Vec<f64> = local.iter().map(|&i| radii[i].ln()).collect();
        let ly: Vec<f64> = local.iter().map(|&i| norms[i].ln()).collect();
        line_fit(&lx, &ly).map_or(f64::INFINITY, |f| f.slope)
    };
    let (beta, residual) = fit.map_or((f64::INFINITY, f64::NAN), |f| (f.slope, f.rms));
    let verdict = if local_slope > n_max {
        VanishingVerdict::ExceedsNMax { local_slope }
    } else {
        VanishingVerdict::FiniteOrder { beta }
    };
    Ok(FitSummary {
        beta,
        residual,
        local_slope,
        ..base
    }
    .finish(radii, norms, verdict))
}

/// Points on each boundary circle added to the lattice supremum.
pub const CIRCLE_POINTS: usize = 1024;

/// `max |v - c|` over interpolated samples on the circle of radius `r`, so
/// that the supremum is taken over the closed disc.
fn circle_sup(v: &dyn DiscSampler, center: Complex64, r: f64, c: Complex64) -> f64 {
    (0..CIRCLE_POINTS)
        .filter_map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_POINTS as f64;
            v.value_at(center + Complex64::from_polar(r, t))
        })
        .map(|w| (w - c).norm())
        .fold(0.0, f64::max)
}

struct FitSummary {
    center_value: Complex64,
    beta: f64,
    residual: f64,
    local_slope: f64,
    n_max: f64,
}

impl FitSummary {
    fn finish(self, radii: Vec<f64>, norms: Vec<f64>, verdict: VanishingVerdict) -> VanishingOrderFit {
        VanishingOrderFit {
            center_value: self.center_value,
            radii,
            norms,
            beta: self.beta,
            residual: self.residual,
            local_slope: self.local_slope,
            n_max: self.n_max,
            verdict,
        }
    }
}
