use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{closed_sup, ChainConstant, DiscLattice, Provenance, StepRecord};
use crate::beltrami::ReductionCoefficient;
use crate::error::{Error, Result};
use crate::field::{gradient, smooth_step, RealField};

/// Radial cutoff: 1 on `B_r`, 0 outside `B_ρ`, smooth in between.
pub fn cutoff(s: f64, r: f64, rho: f64) -> f64 {
    1.0 - smooth_step((s - r) / (rho - r))
}

/// `|∇η|` of [`cutoff`]; at most `2/(ρ - r)`.
pub fn cutoff_gradient(s: f64, r: f64, rho: f64) -> f64 {
    let t = (s - r) / (rho - r);
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let f = smooth_step(t);
    f * (1.0 - f) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / (rho - r)
}

/// Gradient of `v` and the first-order coefficient of the equation in drift
/// form (`W` itself, or `∇ log A` for a weight `A`).
pub(crate) struct EnergyFields<'a> {
    pub v: &'a RealField,
    pub vx: RealField,
    pub vy: RealField,
    pub wx: RealField,
    pub wy: RealField,
}

impl<'a> EnergyFields<'a> {
    pub fn new(v: &'a RealField, coefficient: &ReductionCoefficient) -> Result<Self> {
        let (vx, vy) = gradient(v);
        let (wx, wy) = match coefficient {
            ReductionCoefficient::Drift(w) => {
                v.grid().ensure_same(w.grid())?;
                (w.x_component(), w.y_component())
            }
            ReductionCoefficient::Weight(a) => {
                v.grid().ensure_same(a.grid())?;
                gradient(&a.map(f64::ln))
            }
        };
        Ok(Self { v, vx, vy, wx, wy })
    }

    pub fn grad_norm(&self, z: Complex64) -> Option<f64> {
        Some(self.vx.sample_at(z)?.hypot(self.vy.sample_at(z)?))
    }

    pub fn drift_norm(&self, z: Complex64) -> f64 {
        match (self.wx.sample_at(z), self.wy.sample_at(z)) {
            (Some(a), Some(b)) => a.hypot(b),
            _ => 0.0,
        }
    }

    /// `||W||_{L^p}` over the whole domain.
    pub fn coefficient_norm(&self, p: f64) -> f64 {
        let grid = self.v.grid();
        let sum: f64 = (0..grid.len())
            .filter(|&k| grid.in_domain(grid.point_at(k)))
            .map(|k| match (self.wx.get(k), self.wy.get(k)) {
                (Some(a), Some(b)) => a.hypot(b).powf(p),
                _ => 0.0,
            })
            .sum();
        (sum * grid.cell_area()).powf(1.0 / p)
    }

    /// Energy integrals for the cutoff between `r` and `rho`, with `v`
    /// shifted by its value at the center.
    pub fn terms(&self, p: f64, center: Complex64, r: f64, rho: f64) -> Result<EnergyTerms> {
        let grid = self.v.grid();
        if !(r > 0.0 && r < rho) {
            return Err(Error::InvalidParameter(format!("need 0 < r < rho (got {r}, {rho})")));
        }
        if !grid.contains_disc(center, rho) {
            return Err(Error::DiscOutsideDomain { center, radius: rho });
        }
        let v0 = self
            .v
            .sample_at(center)
            .ok_or_else(|| Error::InvalidParameter("center is not sampled".into()))?;
        let m = ((2.0 * rho / grid.spacing()).ceil() as usize).max(96);
        let lattice = DiscLattice::new(center, rho, m);
        let mut t = EnergyTerms::default();
        for &z in &lattice.points {
            let s = (z - center).norm();
            let eta = cutoff(s, r, rho);
            let deta = cutoff_gradient(s, r, rho);
            let w = self.drift_norm(z).powf(p);
            t.cutoff_norm += deta.powf(p);
            t.drift_norm += w * eta.powf(p);
            if let Some(g) = self.grad_norm(z) {
                let e = g.powf(p);
                t.energy_cut += e * eta.powf(p);
                if s < r {
                    t.energy_inner += e;
                }
            }
            if let Some(val) = self.v.sample_at(z) {
                let d = (val - v0).abs().powf(p);
                t.cutoff_term += d * deta.powf(p);
                t.drift_term += d * w * eta.powf(p);
            }
        }
        let a = lattice.weight;
        t.energy_inner *= a;
        t.energy_cut *= a;
        t.cutoff_term *= a;
        t.drift_term *= a;
        t.cutoff_norm *= a;
        t.drift_norm *= a;
        t.sup = closed_sup(self.v, center, rho, Complex64::new(v0, 0.0), m);
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct EnergyTerms {
    /// `∫_{B_r} |∇v|^p`
    pub energy_inner: f64,
    /// `∫ |∇v|^p η^p`
    pub energy_cut: f64,
    /// `∫ |v - v0|^p |∇η|^p`
    pub cutoff_term: f64,
    /// `∫ |v - v0|^p |W|^p η^p`
    pub drift_term: f64,
    /// `∫ |∇η|^p`
    pub cutoff_norm: f64,
    /// `∫ |W|^p η^p`
    pub drift_norm: f64,
    /// `||v - v0||_{L^∞(B_ρ)}`
    pub sup: f64,
}

impl EnergyTerms {
    pub fn penultimate_rhs(&self, p: f64) -> f64 {
        p.powf(p) * self.cutoff_term + self.drift_term
    }

    /// `K` with `penultimate_rhs <= K ||v - v0||^p_{L^∞(B_ρ)}`.
    pub fn sup_factor(&self, p: f64) -> f64 {
        p.powf(p) * self.cutoff_norm + self.drift_norm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    /// `∫_{B_r}|∇v|^p <= C M^p (ρ-r)^{-p} ||v - v0||^p_{L^∞(B_ρ)}`
    pub packaged: StepRecord,
    /// `∫|∇v|^p η^p <= p^p ∫|v - v0|^p |∇η|^p + ∫|v - v0|^p |W|^p η^p`
    pub penultimate: StepRecord,
    /// `||W||_{L^p}` was below 1 and `M = 1` was used.
    pub guard_active: bool,
}

/// Checks both forms of the Caccioppoli inequality for a solution `v` of the
/// drift or weighted equation (`v` is shifted by `v(center)`; the equations
/// are invariant under constants).
pub fn caccioppoli_check(
    v: &RealField,
    coefficient: &ReductionCoefficient,
    p: f64,
    center: Complex64,
    r: f64,
    rho: f64,
) -> Result<CaccioppoliReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
    }
    let fields = EnergyFields::new(v, coefficient)?;
    let t = fields.terms(p, center, r, rho)?;
    let norm = fields.coefficient_norm(p);
    let m = norm.max(1.0);
    let c = 2.0 * (4.0 * p).powf(p);
    let packaged = StepRecord::new(
        "caccioppoli_packaged",
        "caccioppoli inequality",
        Some(r),
        t.energy_inner,
        c * m.powf(p) / (rho - r).powf(p) * t.sup.powf(p),
        vec![
            ChainConstant::new("C", c, Provenance::PaperFormula),
            ChainConstant::new("M", m, Provenance::Measured),
            ChainConstant::new("sup_v", t.sup, Provenance::Measured),
        ],
    );
    let penultimate = StepRecord::new(
        "caccioppoli_penultimate",
        "caccioppoli inequality before absorption",
        Some(r),
        t.energy_cut,
        t.penultimate_rhs(p),
        vec![
            ChainConstant::new("p_power", p.powf(p), Provenance::PaperFormula),
            ChainConstant::new("cutoff_term", t.cutoff_term, Provenance::Measured),
            ChainConstant::new("drift_term", t.drift_term, Provenance::Measured),
        ],
    );
    Ok(CaccioppoliReport {
        packaged,
        penultimate,
        guard_active: norm < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_gradient_matches_difference() {
        let (r, rho) = (1.0, 2.0);
        for s in [1.1, 1.3, 1.5, 1.8] {
            let h = 1e-6;
            let fd = (cutoff(s - h, r, rho) - cutoff(s + h, r, rho)) / (2.0 * h);
            assert!((fd - cutoff_gradient(s, r, rho)).abs() < 1e-6);
        }
        let max = (1..1000)
            .map(|i| cutoff_gradient(1.0 + i as f64 / 1000.0, r, rho))
            .fold(0.0, f64::max);
        assert!(max <= 4.0 / (rho - r));
    }
}
