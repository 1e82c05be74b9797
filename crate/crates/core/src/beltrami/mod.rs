//! Reduction of the drift and weighted equations to Beltrami systems.
//!
//! For a solution `v`, the complex gradient `G = v_x - i v_y` (times `A` for the
//! weighted equation) is raised to `F = |G|^a G`, `a = (p - 2)/2`, which
//! satisfies `F_zbar = q1 F_z + q2 conj(F_z) + q3 F`. Writing this as
//! `F_zbar = o1 F_z + o2 F` and solving `(I - o1 S) g = o2` gives
//! `ω = T g` and the quasiregular factor `f = F e^{-ω}`.

mod checks;
mod conjugate;
mod neumann;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    gradient, wirtinger_derivatives, ComplexField, DerivativeMethod, RealField, VectorField2,
};

pub use checks::{
    line_cusp, quasiregularity_check, w12_difference_quotient_check, QuasiregularityReport,
    W12Report,
};
pub use conjugate::{conjugate_function, ConjugateFunction, CURL_MARGIN, DEFAULT_CURL_TOLERANCE};
pub use neumann::{
    neumann_solve, normalize_f, reduce, NeumannReport, Normalized, ReduceSettings, ReductionResult,
    OMEGA_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeltramiVariant {
    Drift,
    WeightedLipschitz,
    WeightedNonlinear,
}

/// Ellipticity constants of the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiConstants {
    pub k: f64,
    pub big_k: f64,
    /// `1 + 1/k`; infinite when `k = 0`.
    pub p0: f64,
}

pub fn beltrami_constants(p: f64) -> Result<BeltramiConstants> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exponent p = {p} must exceed 1"
        )));
    }
    // (1 + k)/(1 - k) and 1 + 1/k reduced to rational functions of p
    let (k, big_k, p0) = if p >= 2.0 {
        ((p - 2.0) / (p + 2.0), p / 2.0, 2.0 * p / (p - 2.0))
    } else {
        (
            (2.0 - p) / (3.0 * p - 2.0),
            p / (2.0 * (p - 1.0)),
            2.0 * p / (2.0 - p),
        )
    };
    let p0 = if k == 0.0 { f64::INFINITY } else { p0 };
    Ok(BeltramiConstants { k, big_k, p0 })
}

/// Integrability exponent: `q` when `q < 1 + 1/k`, otherwise the midpoint
/// `(3k + 1)/(2k)` of `(2, 1 + 1/k)`.
pub fn choose_delta(p: f64, q: f64) -> Result<f64> {
    let c = beltrami_constants(p)?;
    if c.k == 0.0 || q < c.p0 {
        Ok(q)
    } else {
        Ok((3.0 * c.k + 1.0) / (2.0 * c.k))
    }
}

/// Prefactors of the general-`a` coefficient form,
/// `((p-2-a)/(p+a), a/(a+2), 2(a+1)/(a+p))` with `a = (p-2)/2`.
pub fn general_a_factors(p: f64) -> [f64; 3] {
    let a = (p - 2.0) / 2.0;
    [
        (p - 2.0 - a) / (p + a),
        a / (a + 2.0),
        2.0 * (a + 1.0) / (a + p),
    ]
}

/// The same prefactors written in `p` alone:
/// `((p-2)/(3p-2), (p-2)/(p+2), 2p/(3p-2))`.
pub fn closed_form_factors(p: f64) -> [f64; 3] {
    [
        (p - 2.0) / (3.0 * p - 2.0),
        (p - 2.0) / (p + 2.0),
        2.0 * p / (3.0 * p - 2.0),
    ]
}

/// Prefactor of the drift coefficient `q3` for which the Beltrami identity
/// holds: `-p / (2(3p - 2))`, a quarter of the `2p/(3p-2)` closed form.
pub fn drift_q3_factor(p: f64) -> f64 {
    -p / (2.0 * (3.0 * p - 2.0))
}

/// The lower-order data of the equation being reduced.
#[derive(Debug, Clone)]
pub enum ReductionCoefficient {
    Drift(VectorField2),
    Weight(RealField),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    /// Samples with `|F| < mask_tau_rel * sup|F|` are masked.
    pub mask_tau_rel: f64,
    /// Exponent for the measured coefficient norm; `None` uses the sup norm.
    pub q: Option<f64>,
    /// Reject systems whose masked fraction of the domain exceeds this.
    pub masked_fraction_limit: Option<f64>,
    pub curl_tolerance: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            mask_tau_rel: 1e-8,
            q: None,
            masked_fraction_limit: None,
            curl_tolerance: DEFAULT_CURL_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeltramiSystem {
    pub variant: BeltramiVariant,
    pub p: f64,
    pub a: f64,
    pub constants: BeltramiConstants,
    pub delta: f64,
    /// The reduced unknown `F`.
    pub f_big: ComplexField,
    pub q1: ComplexField,
    pub q2: ComplexField,
    pub q3: ComplexField,
    /// Nonlinear coefficient `μ` (weighted nonlinear variant only).
    pub mu: Option<ComplexField>,
    /// Linear coefficient `o1 = q1 + q2 conj(F_z)/F_z` (or `μ conj(F_z)/F_z`).
    pub o1: ComplexField,
    /// `o2 = q3`.
    pub o2: ComplexField,
    pub mask_tau: f64,
    pub masked_fraction: f64,
    /// `max(1, measured coefficient norm)`.
    pub m_bound: f64,
    pub q3_delta_norm: f64,
}

impl BeltramiSystem {
    /// Largest `|q1| + |q2|` (or `|μ|`) over the unmasked set.
    pub fn measured_k(&self) -> f64 {
        let mut k: f64 = 0.0;
        for i in 0..self.q1.grid().len() {
            let v = match &self.mu {
                Some(mu) => mu.samples()[i].norm(),
                None => self.q1.samples()[i].norm() + self.q2.samples()[i].norm(),
            };
            k = k.max(v);
        }
        k
    }
}

/// `F = |G|^a G` with `G = v_x - i v_y`; zero where `G` vanishes.
pub fn complex_gradient_f(v: &RealField, p: f64) -> Result<ComplexField> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent p = {p} must exceed 1"
        )));
    }
    let (vx, vy) = gradient(v);
    let g = vx.zip_map(&vy, |a, b| Complex64::new(a, -b))?;
    Ok(power_map(&g, p))
}

fn power_map(g: &ComplexField, p: f64) -> ComplexField {
    let a = (p - 2.0) / 2.0;
    g.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            Complex64::default()
        } else {
            z * r.powf(a)
        }
    })
}

/// Builds the Beltrami coefficients for a solution `v`.
pub fn assemble_coefficients(
    v: &RealField,
    coefficient: &ReductionCoefficient,
    p: f64,
    variant: BeltramiVariant,
    options: &AssembleOptions,
) -> Result<BeltramiSystem> {
    let constants = beltrami_constants(p)?;
    let grid = *v.grid();
    let a = (p - 2.0) / 2.0;
    let domain = grid.domain_mask();
    let (vx, vy) = gradient(v);
    let g = vx.zip_map(&vy, |x, y| Complex64::new(x, -y))?;

    let weight = match (coefficient, variant) {
        (ReductionCoefficient::Drift(w), BeltramiVariant::Drift) => {
            grid.ensure_same(w.grid())?;
            None
        }
        (
            ReductionCoefficient::Weight(wt),
            BeltramiVariant::WeightedLipschitz | BeltramiVariant::WeightedNonlinear,
        ) => {
            grid.ensure_same(wt.grid())?;
            let min = (0..grid.len())
                .filter(|&k| domain[k] && g.mask()[k])
                .map(|k| wt.get(k).unwrap_or(f64::NAN))
                .fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight must be positive (min {min})"
                )));
            }
            Some(wt)
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "coefficient kind does not match variant {variant:?}"
            )))
        }
    };

    let (f_big, mu) = match variant {
        BeltramiVariant::Drift => (power_map(&g, p), None),
        BeltramiVariant::WeightedLipschitz => {
            let wt = weight.expect("weighted variant");
            let ga = g.zip_map(wt, |z, w| z * w)?;
            (power_map(&ga, p), None)
        }
        BeltramiVariant::WeightedNonlinear => {
            let wt = weight.expect("weighted variant");
            let conj = conjugate_function(v, wt, p, options.curl_tolerance)?;
            let f_big = v.zip_map(&conj.w, |a, b| Complex64::new(a, b))?;
            let grad_mod = vx.zip_map(&vy, |x, y| x.hypot(y))?;
            let mu = grad_mod.zip_map(wt, |m, w| {
                let t = w * m.powf(p - 2.0);
                let r = if t.is_infinite() {
                    -1.0
                } else {
                    (1.0 - t) / (1.0 + t)
                };
                Complex64::new(r, 0.0)
            })?;
            (f_big, Some(mu))
        }
    };

    let sup_f = f_big
        .samples()
        .iter()
        .zip(f_big.mask())
        .zip(&domain)
        .filter(|((_, &m), &d)| m && d)
        .fold(0.0_f64, |s, ((z, _), _)| s.max(z.norm()));
    let mask_tau = options.mask_tau_rel * sup_f;
    let active: Vec<bool> = (0..grid.len())
        .map(|k| {
            domain[k] && f_big.mask()[k] && f_big.samples()[k].norm() >= mask_tau && mask_tau > 0.0
        })
        .collect();
    let domain_count = domain.iter().filter(|&&d| d).count();
    let active_in_domain = (0..grid.len()).filter(|&k| active[k]).count();
    let masked_fraction = 1.0 - active_in_domain as f64 / domain_count.max(1) as f64;
    if let Some(limit) = options.masked_fraction_limit {
        if masked_fraction > limit {
            return Err(Error::MaskedFraction {
                fraction: masked_fraction,
                limit,
            });
        }
    }

    let [c2, c1, _] = closed_form_factors(p);
    let q1_factor = -0.5 * (c1 + c2);
    let q2_factor = -0.5 * (c2 - c1);
    let ratio = |k: usize| {
        let z = f_big.samples()[k];
        z.conj() / z
    };
    let zero = Complex64::default();

    let q1: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            if active[k] && mu.is_none() {
                q1_factor * ratio(k)
            } else {
                zero
            }
        })
        .collect();
    let q2: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            if active[k] && mu.is_none() {
                q2_factor / ratio(k)
            } else {
                zero
            }
        })
        .collect();

    let q3: Vec<Complex64> = match (variant, coefficient) {
        (BeltramiVariant::Drift, ReductionCoefficient::Drift(w)) => {
            let c = drift_q3_factor(p);
            (0..grid.len())
                .map(|k| {
                    if !active[k] {
                        return zero;
                    }
                    let (a1, a2) = w.at(k);
                    let r = ratio(k);
                    c * (a1 * (1.0 + r) + Complex64::i() * a2 * (1.0 - r))
                })
                .collect()
        }
        (BeltramiVariant::WeightedLipschitz, ReductionCoefficient::Weight(wt)) => {
            let inv = wt.map(|x| Complex64::new(1.0 / x, 0.0));
            let inv_pow = wt.map(|x| Complex64::new(x.powf(2.0 - p), 0.0));
            let (inv_z, inv_zb) = wirtinger_derivatives(&inv, DerivativeMethod::CenteredDifference);
            let (pow_z, pow_zb) =
                wirtinger_derivatives(&inv_pow, DerivativeMethod::CenteredDifference);
            (0..grid.len())
                .map(|k| {
                    let (Some(iz), Some(izb), Some(pz), Some(pzb), Some(av)) = (
                        inv_z.get(k),
                        inv_zb.get(k),
                        pow_z.get(k),
                        pow_zb.get(k),
                        wt.get(k),
                    ) else {
                        return zero;
                    };
                    if !active[k] {
                        return zero;
                    }
                    let r = ratio(k);
                    av * p / (p + 2.0) * (r * iz - izb)
                        - av.powf(p - 2.0) * p / (3.0 * p - 2.0) * (r * pz + pzb)
                })
                .collect()
        }
        _ => vec![zero; grid.len()],
    };

    // o1 folds q2 conj(F_z) into a single linear coefficient
    let (fz, _) = wirtinger_derivatives(
        &f_big.restrict(&active),
        DerivativeMethod::CenteredDifference,
    );
    let o1: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            if !active[k] {
                return zero;
            }
            let phase = match fz.get(k) {
                Some(d) if d.norm() > 0.0 => d.conj() / d,
                _ => zero,
            };
            match &mu {
                Some(m) => m.samples()[k] * phase,
                None => q1[k] + q2[k] * phase,
            }
        })
        .collect();

    let everywhere = vec![true; grid.len()];
    let field = |s: Vec<Complex64>| ComplexField::new(grid, s, everywhere.clone());
    let q3 = field(q3)?;
    let mu = match mu {
        Some(m) => Some(field(
            (0..grid.len())
                .map(|k| if active[k] { m.samples()[k] } else { zero })
                .collect(),
        )?),
        None => None,
    };
    let delta = match options.q {
        Some(q) => choose_delta(p, q)?,
        None => choose_delta(p, f64::INFINITY)?,
    };
    let delta = if delta.is_finite() { delta } else { 2.0 };
    let measured = match coefficient {
        ReductionCoefficient::Drift(w) => {
            let m = w.magnitude().restrict(&domain);
            options.q.map_or_else(|| m.sup_modulus(), |q| m.lp_norm(q))
        }
        ReductionCoefficient::Weight(wt) => {
            crate::solver::discrete_lipschitz(&VectorField2::from_components(
                &wt.restrict(&domain),
                &RealField::zeros(grid).restrict(&domain),
            )?)
        }
    };
    let q3_delta_norm = q3.lp_norm(delta);
    Ok(BeltramiSystem {
        variant,
        p,
        a,
        constants,
        delta,
        f_big,
        q1: field(q1)?,
        q2: field(q2)?,
        o2: q3.clone(),
        q3,
        mu,
        o1: field(o1)?,
        mask_tau,
        masked_fraction,
        m_bound: measured.max(1.0),
        q3_delta_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DiskGrid;

    #[test]
    fn constants_match_closed_forms() {
        let c = beltrami_constants(2.0).unwrap();
        assert_eq!((c.k, c.big_k), (0.0, 1.0));
        assert!(c.p0.is_infinite());
        let c = beltrami_constants(4.0).unwrap();
        assert!(
            (c.k - 1.0 / 3.0).abs() < 1e-15
                && (c.big_k - 2.0).abs() < 1e-15
                && (c.p0 - 4.0).abs() < 1e-14
        );
        let c = beltrami_constants(1.5).unwrap();
        assert!(
            (c.k - 0.2).abs() < 1e-15
                && (c.big_k - 1.5).abs() < 1e-15
                && (c.p0 - 6.0).abs() < 1e-13
        );
    }

    #[test]
    fn delta_rule() {
        assert!((choose_delta(4.0, 5.0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(choose_delta(4.0, 3.0).unwrap(), 3.0);
        assert_eq!(choose_delta(2.0, 7.0).unwrap(), 7.0);
    }

    #[test]
    fn complex_gradient_examples() {
        let g = DiskGrid::new(64, 2.0, 8.0).unwrap();
        let v = RealField::from_fn(g, |z| (z * z).re);
        let f = complex_gradient_f(&v, 4.0).unwrap();
        let k = g.index(40, 21);
        let z = g.point_at(k);
        assert!((f.get(k).unwrap() - 4.0 * z * z.norm()).norm() < 1e-12);
        let f2 = complex_gradient_f(&v, 2.0).unwrap();
        assert!((f2.get(k).unwrap() - 2.0 * z).norm() < 1e-12);
    }

    #[test]
    fn affine_drift_coefficients() {
        let g = DiskGrid::new(32, 2.0, 8.0).unwrap();
        let v = RealField::from_fn(g, |z| z.re);
        let sys = assemble_coefficients(
            &v,
            &ReductionCoefficient::Drift(VectorField2::zeros(g)),
            4.0,
            BeltramiVariant::Drift,
            &AssembleOptions::default(),
        )
        .unwrap();
        let k = g.index(16, 16);
        assert!((sys.q1.samples()[k] - Complex64::new(-4.0 / 15.0, 0.0)).norm() < 1e-14);
        assert!((sys.q2.samples()[k] - Complex64::new(1.0 / 15.0, 0.0)).norm() < 1e-14);
        assert!(sys.measured_k() <= 1.0 / 3.0 + 1e-12);
    }
}
