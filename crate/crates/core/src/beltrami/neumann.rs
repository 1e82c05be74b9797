use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    assemble_coefficients, AssembleOptions, BeltramiSystem, BeltramiVariant, ReductionCoefficient,
};
use crate::error::{Error, Result};
use crate::field::io::{write_field, AnyField};
use crate::field::{ComplexField, RealField};
use crate::singular::{beurling_transform, cauchy_transform, TransformPlan};

/// Largest admissible `||ω||_∞` before `e^{-ω}` is considered out of range.
pub const OMEGA_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannReport {
    pub iterations: usize,
    /// `||g_{n+1} - g_n|| / ||g_n - g_{n-1}||` per step.
    pub contraction_history: Vec<f64>,
    pub increments: Vec<f64>,
    /// `||(I - o1 S) g - o2||_{L^2}`.
    pub residual: f64,
    /// `tol (1 + k)/(1 - k)`.
    pub residual_bound: f64,
    pub g_delta_norm: f64,
}

fn l2_diff(a: &[Complex64], b: &[Complex64], cell: f64) -> f64 {
    (a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        * cell)
        .sqrt()
}

/// `o2 + o1 S g`, zero outside the domain.
fn neumann_map(
    system: &BeltramiSystem,
    plan: &TransformPlan,
    g: &ComplexField,
) -> Result<ComplexField> {
    let sg = beurling_transform(plan, g)?;
    let o1 = system.o1.samples();
    let o2 = system.o2.samples();
    let out: Vec<Complex64> = sg
        .samples()
        .iter()
        .enumerate()
        .map(|(k, s)| o2[k] + o1[k] * s)
        .collect();
    ComplexField::new(*g.grid(), out, vec![true; g.grid().len()])
}

/// Fixed-point solve of `(I - o1 S) g = o2` in `L^2`.
pub fn neumann_solve(
    system: &BeltramiSystem,
    plan: &TransformPlan,
    tol: f64,
    max_iter: usize,
) -> Result<(ComplexField, NeumannReport)> {
    let grid = *system.o1.grid();
    grid.ensure_same(plan.grid())?;
    let k = system.constants.k;
    let measured_k = system.o1.sup_modulus();
    if !(k < 1.0) || measured_k >= 1.0 {
        return Err(Error::Inconsistent(format!(
            "coefficient bound {measured_k} (closed form {k}) is not a contraction"
        )));
    }
    let cell = grid.cell_area();
    let mut g = system.o2.clone();
    let mut report = NeumannReport {
        iterations: 0,
        contraction_history: Vec::new(),
        increments: Vec::new(),
        residual: f64::NAN,
        residual_bound: tol * (1.0 + k) / (1.0 - k),
        g_delta_norm: f64::NAN,
    };
    let mut converged = false;
    for _ in 0..max_iter {
        let next = neumann_map(system, plan, &g)?;
        let inc = l2_diff(next.samples(), g.samples(), cell);
        if let Some(&prev) = report.increments.last() {
            if prev > 0.0 {
                report.contraction_history.push(inc / prev);
            }
        }
        report.increments.push(inc);
        report.iterations += 1;
        g = next;
        if inc <= tol {
            converged = true;
            break;
        }
        let h = &report.contraction_history;
        if h.len() >= 3 && h[h.len() - 3..].iter().all(|&r| r >= 1.0) {
            return Err(Error::Inconsistent(format!(
                "Neumann increments stopped contracting (ratio {:.4})",
                h[h.len() - 1]
            )));
        }
    }
    if !converged {
        return Err(Error::NeumannMaxIter {
            max_iter,
            last_increment: report.increments.last().copied().unwrap_or(f64::NAN),
        });
    }
    let image = neumann_map(system, plan, &g)?;
    report.residual = l2_diff(image.samples(), g.samples(), cell);
    report.g_delta_norm = g.restrict(&grid.domain_mask()).lp_norm(system.delta);
    Ok((g, report))
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub omega: ComplexField,
    pub f: ComplexField,
    pub omega_sup: f64,
    /// `(||ω||² + ||∇ω||²)^{1/2}` on the domain, with `|∇ω|² = 2(|Sg|² + |g|²)`.
    pub omega_w12: f64,
}

/// `ω = T g` and `f = F e^{-ω}` on the support of `F`.
pub fn normalize_f(
    f_big: &ComplexField,
    g: &ComplexField,
    plan: &TransformPlan,
) -> Result<Normalized> {
    normalize_branch(f_big, g, plan, false)
}

fn normalize_branch(
    f_big: &ComplexField,
    g: &ComplexField,
    plan: &TransformPlan,
    mean_zero: bool,
) -> Result<Normalized> {
    let grid = *f_big.grid();
    grid.ensure_same(g.grid())?;
    let domain = grid.domain_mask();
    let mut omega = cauchy_transform(plan, g)?;
    if mean_zero {
        let count = domain.iter().filter(|&&d| d).count().max(1) as f64;
        let mean = (0..grid.len())
            .filter(|&k| domain[k])
            .map(|k| omega.samples()[k])
            .sum::<Complex64>()
            / count;
        omega = omega.map(|w| w - mean);
    }
    let omega_sup = omega.restrict(&domain).sup_modulus();
    if !(omega_sup <= OMEGA_LIMIT) {
        return Err(Error::OmegaOverflow(omega_sup));
    }
    let sg = beurling_transform(plan, g)?;
    let cell = grid.cell_area();
    let mut w12 = 0.0;
    for k in 0..grid.len() {
        if domain[k] {
            let s = sg.samples()[k].norm_sqr();
            let d = g.get(k).unwrap_or_default().norm_sqr();
            w12 += omega.samples()[k].norm_sqr() + 2.0 * (s + d);
        }
    }
    let f = f_big.zip_map(&omega, |a, w| a * (-w).exp())?;
    Ok(Normalized {
        omega,
        f,
        omega_sup,
        omega_w12: (w12 * cell).sqrt(),
    })
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub system: BeltramiSystem,
    pub g: ComplexField,
    pub omega: ComplexField,
    pub f: ComplexField,
    pub neumann: NeumannReport,
    pub omega_sup: f64,
    pub omega_w12: f64,
    /// `||g||_{L^δ} / ||q3||_{L^δ}` (NaN when `q3 = 0`).
    pub g_over_q3: f64,
    /// `||f e^ω - F|| / ||F||` on the unmasked set.
    pub representation_error: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    variant: BeltramiVariant,
    p: f64,
    k: f64,
    big_k: f64,
    p0: Option<f64>,
    delta: f64,
    mask_tau: f64,
    masked_fraction: f64,
    m_bound: f64,
    q3_delta_norm: f64,
    omega_sup: f64,
    omega_w12: f64,
    g_over_q3: f64,
    representation_error: f64,
    neumann: &'a NeumannReport,
}

impl ReductionResult {
    /// Writes `F.pucp`, `g.pucp`, `omega.pucp`, `f.pucp` and `summary.json`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (name, field) in [
            ("F", &self.system.f_big),
            ("g", &self.g),
            ("omega", &self.omega),
            ("f", &self.f),
        ] {
            write_field(
                dir.join(format!("{name}.pucp")),
                &AnyField::Complex(field.clone()),
            )?;
        }
        let c = self.system.constants;
        let summary = Summary {
            variant: self.system.variant,
            p: self.system.p,
            k: c.k,
            big_k: c.big_k,
            p0: c.p0.is_finite().then_some(c.p0),
            delta: self.system.delta,
            mask_tau: self.system.mask_tau,
            masked_fraction: self.system.masked_fraction,
            m_bound: self.system.m_bound,
            q3_delta_norm: self.system.q3_delta_norm,
            omega_sup: self.omega_sup,
            omega_w12: self.omega_w12,
            g_over_q3: self.g_over_q3,
            representation_error: self.representation_error,
            neumann: &self.neumann,
        };
        let text =
            serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join("summary.json"), text)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduceSettings {
    pub assemble: AssembleOptions,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReduceSettings {
    fn default() -> Self {
        Self {
            assemble: AssembleOptions::default(),
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Full pipeline: coefficients, Neumann solve, normalization with the
/// mean-zero branch of `ω` on the domain.
pub fn reduce(
    v: &RealField,
    coefficient: &ReductionCoefficient,
    p: f64,
    variant: BeltramiVariant,
    settings: &ReduceSettings,
    plan: &TransformPlan,
) -> Result<ReductionResult> {
    let system = assemble_coefficients(v, coefficient, p, variant, &settings.assemble)?;
    let (g, neumann) = neumann_solve(&system, plan, settings.tol, settings.max_iter)?;
    let norm = normalize_branch(&system.f_big, &g, plan, true)?;
    let active: Vec<bool> = (0..g.grid().len())
        .map(|k| system.f_big.mask()[k] && g.grid().in_domain(g.grid().point_at(k)))
        .collect();
    let back = norm.f.zip_map(&norm.omega, |f, w| f * w.exp())?;
    let diff = back.zip_map(&system.f_big, |a, b| a - b)?.restrict(&active);
    let representation_error = diff.l2_norm()
        / system
            .f_big
            .restrict(&active)
            .l2_norm()
            .max(f64::MIN_POSITIVE);
    let g_over_q3 = if system.q3_delta_norm > 0.0 {
        neumann.g_delta_norm / system.q3_delta_norm
    } else {
        f64::NAN
    };
    Ok(ReductionResult {
        system,
        g,
        omega: norm.omega,
        f: norm.f,
        neumann,
        omega_sup: norm.omega_sup,
        omega_w12: norm.omega_w12,
        g_over_q3,
        representation_error,
    })
}
