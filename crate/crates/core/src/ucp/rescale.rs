use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DiscSampler, DiskGrid, RealField, VectorField2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub scale: f64,
    pub z0: Complex64,
    pub q: f64,
}

impl RescaleParams {
    pub fn new(scale: f64, z0: Complex64, q: f64) -> Result<Self> {
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {scale} must be at least 1")));
        }
        if (z0.norm() - scale).abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "|z0| = {} must equal the scale {scale}",
                z0.norm()
            )));
        }
        if !(q >= 2.0) {
            return Err(Error::InvalidParameter(format!("exponent q = {q} must be at least 2")));
        }
        Ok(Self { scale, z0, q })
    }
}

#[derive(Debug, Clone)]
pub struct RescaleOutcome {
    /// `u_R(z) = u(Rz + z0)`
    pub u: RealField,
    /// `W_R(z) = R W(Rz + z0)`
    pub w: VectorField2,
    /// `||W_R||_{L^q(B_8)}`
    pub measured: f64,
    /// `||W||_{L^q}` over the source window.
    pub source_norm: f64,
    /// `R^{1-2/q} ||W||_{L^q}`
    pub bound: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// Resamples `u` and `W` at scale `R` about `z0` onto `target` (bilinear) and
/// compares `||W_R||_{L^q}` with `R^{1-2/q} ||W||_{L^q}`.
pub fn rescale_bourgain_kenig(
    u: &RealField,
    w: &VectorField2,
    params: &RescaleParams,
    target: &DiskGrid,
    tolerance: f64,
) -> Result<RescaleOutcome> {
    u.grid().ensure_same(w.grid())?;
    let r = params.scale;
    let reach = target.domain_radius() * r;
    let image_center = params.z0 + r * target.center();
    if !u.grid().contains_disc(image_center, reach) {
        return Err(Error::WindowTooSmall(format!(
            "source window of radius {} does not cover the disc of radius {reach} about {image_center}",
            u.grid().domain_radius()
        )));
    }
    let map = |z: Complex64| params.z0 + r * z;
    let mask = target.domain_mask();
    let mut us = vec![0.0; target.len()];
    let mut wx = vec![0.0; target.len()];
    let mut wy = vec![0.0; target.len()];
    let mut out_mask = vec![false; target.len()];
    let (sx, sy) = (w.x_component(), w.y_component());
    for k in 0..target.len() {
        if !mask[k] {
            continue;
        }
        let z = map(target.point_at(k));
        if let (Some(a), Some(b), Some(c)) = (u.sample_at(z), sx.sample_at(z), sy.sample_at(z)) {
            us[k] = a;
            wx[k] = r * b;
            wy[k] = r * c;
            out_mask[k] = true;
        }
    }
    let u_r = RealField::new(*target, us, out_mask.clone())?;
    let w_r = VectorField2::new(*target, wx, wy, out_mask)?;
    let measured = w_r.lq_norm(params.q);
    let source_norm = w.lq_norm(params.q);
    let bound = r.powf(1.0 - 2.0 / params.q) * source_norm;
    Ok(RescaleOutcome {
        passes: measured <= bound * (1.0 + tolerance),
        u: u_r,
        w: w_r,
        measured,
        source_norm,
        bound,
        tolerance,
    })
}

/// Points on each probe circle added to the lattice supremum.
const PROBE_CIRCLE_POINTS: usize = 256;

/// `min` over `probes` equispaced `z0` on `|z0| = R` (rotated by `phase`) of
/// `sup_{B_1(z0)} |u|`, the supremum taken over lattice samples plus
/// interpolated samples on the unit circle about `z0`.
pub fn landis_infsup(u: &RealField, radius: f64, probes: usize, phase: f64) -> Result<f64> {
    if probes < 64 {
        return Err(Error::InvalidParameter(format!("need at least 64 probes (got {probes})")));
    }
    let grid = u.grid();
    if !grid.contains_disc(grid.center(), radius + 1.0) {
        return Err(Error::WindowTooSmall(format!(
            "window of radius {} does not cover |z| <= {}",
            grid.domain_radius(),
            radius + 1.0
        )));
    }
    let mut best = f64::INFINITY;
    for j in 0..probes {
        let t = phase + 2.0 * std::f64::consts::PI * j as f64 / probes as f64;
        let z0 = grid.center() + Complex64::from_polar(radius, t);
        let inner = u.disc_samples(z0, 1.0)?.sup();
        let rim = (0..PROBE_CIRCLE_POINTS)
            .filter_map(|k| {
                let s = 2.0 * std::f64::consts::PI * k as f64 / PROBE_CIRCLE_POINTS as f64;
                u.sample_at(z0 + Complex64::from_polar(1.0, s))
            })
            .map(f64::abs)
            .fold(0.0, f64::max);
        best = best.min(inner.max(rim));
    }
    Ok(best)
}
