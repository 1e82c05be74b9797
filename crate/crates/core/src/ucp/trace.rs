use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::caccioppoli::{EnergyFields, EnergyTerms};
use super::trudinger::trudinger_exp_integral;
use super::{closed_sup, CalibratedConstants, ChainConstant, DiscLattice, EstimateChain, Provenance, StepRecord};
use crate::beltrami::{choose_delta, BeltramiVariant, ReductionCoefficient, ReductionResult};
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};

/// Masked fraction above which coefficient fields are not trusted.
pub const MASKED_FRACTION_LIMIT: f64 = 0.1;

/// Relative representation error `||f e^ω - F|| / ||F||` accepted by the chain.
const REPRESENTATION_TOLERANCE: f64 = 1e-6;

/// Radius of the disc carrying the solution in every chain.
const OUTER_RADIUS: f64 = 8.0;
const ENERGY_RADIUS: f64 = 7.0;
/// Disc of the averaged normalization in the `q = 2` branch.
const L2_NORMALIZATION_RADIUS: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    DriftLq,
    DriftL2,
    WeightedLip,
    WeightedHolder,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Self::DriftLq, Self::DriftL2, Self::WeightedLip, Self::WeightedHolder];

    pub fn name(self) -> &'static str {
        match self {
            Self::DriftLq => "drift_lq",
            Self::DriftL2 => "drift_l2",
            Self::WeightedLip => "weighted_lip",
            Self::WeightedHolder => "weighted_holder",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn variant(self) -> BeltramiVariant {
        match self {
            Self::DriftLq | Self::DriftL2 => BeltramiVariant::Drift,
            Self::WeightedLip => BeltramiVariant::WeightedLipschitz,
            Self::WeightedHolder => BeltramiVariant::WeightedNonlinear,
        }
    }

    /// Exponent ranges covered by each branch: `q > max(2, p)` or `q = p > 2`
    /// with drift in `L^q`; `q = 2` with `1 < p <= 2`. The weighted branches
    /// do not use `q`.
    pub fn check_exponents(self, p: f64, q: Option<f64>) -> Result<()> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
        }
        let need_q = || q.ok_or_else(|| Error::InvalidParameter(format!("branch {} needs q", self.name())));
        match self {
            Self::DriftLq => {
                let q = need_q()?;
                if !(q > p.max(2.0) || (q == p && p > 2.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "branch drift_lq needs q > max(2, p) or q = p > 2 (p = {p}, q = {q})"
                    )));
                }
            }
            Self::DriftL2 => {
                let q = need_q()?;
                if !(q == 2.0 && p <= 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "branch drift_l2 needs q = 2 and 1 < p <= 2 (p = {p}, q = {q})"
                    )));
                }
            }
            Self::WeightedLip | Self::WeightedHolder => {}
        }
        Ok(())
    }

    fn gradient_normalized(self) -> bool {
        !matches!(self, Self::WeightedHolder)
    }
}

/// A solved problem together with its reduction.
#[derive(Debug, Clone, Copy)]
pub struct TraceInput<'a> {
    pub v: &'a RealField,
    pub coefficient: &'a ReductionCoefficient,
    pub reduction: &'a ReductionResult,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    /// Dominance radii (any order; reported decreasing).
    pub radii: Vec<f64>,
    pub center: Complex64,
    /// Rescale `v` to meet the normalization instead of refusing.
    pub rescale: bool,
    pub constants: CalibratedConstants,
    pub masked_fraction_limit: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            radii: (1..=7).map(|j| 0.5_f64.powi(j)).collect(),
            center: Complex64::default(),
            rescale: false,
            constants: CalibratedConstants::default(),
            masked_fraction_limit: MASKED_FRACTION_LIMIT,
        }
    }
}

/// The same reduction with `ω` multiplied by `factor` and `f` left alone.
pub fn corrupt_omega(reduction: &ReductionResult, factor: f64) -> ReductionResult {
    let mut out = reduction.clone();
    out.omega = reduction.omega.scale(factor);
    out.omega_sup = reduction.omega_sup * factor.abs();
    out
}

fn lattice_points(radius: f64, spacing: f64) -> usize {
    ((2.0 * radius / spacing).ceil() as usize).max(96)
}

fn l2_on_disc(field: &ComplexField, center: Complex64, radius: f64) -> f64 {
    let lattice = DiscLattice::new(center, radius, lattice_points(radius, field.grid().spacing()));
    lattice.integral(|z| field.sample_at(z).map(|w| w.norm_sqr())).sqrt()
}

/// Sup over the domain of `|ω|`.
fn domain_sup(field: &ComplexField) -> f64 {
    let grid = field.grid();
    (0..grid.len())
        .filter(|&k| grid.in_domain(grid.point_at(k)))
        .filter_map(|k| field.get(k))
        .map(|w| w.norm())
        .fold(0.0, f64::max)
}

fn domain_lp(field: &ComplexField, p: f64) -> f64 {
    let grid = field.grid();
    let values = (0..grid.len())
        .filter(|&k| grid.in_domain(grid.point_at(k)))
        .filter_map(|k| field.get(k))
        .map(|w| w.norm());
    if p.is_infinite() {
        return values.fold(0.0, f64::max);
    }
    (values.map(|a| a.powf(p)).sum::<f64>() * grid.cell_area()).powf(1.0 / p)
}

/// `sup_{|z| <= R} (1/π) ||1/(z - ·)||_{L^{δ'}(B_R)}`, attained at the
/// center, so that `|Tg| <= C_T ||g||_{L^δ(B_R)}` on `B_R`.
pub(crate) fn cauchy_holder_constant(delta: f64, radius: f64) -> f64 {
    if delta.is_infinite() {
        return 2.0 * radius;
    }
    let dp = delta / (delta - 1.0);
    (2.0 * std::f64::consts::PI * radius.powf(2.0 - dp) / (2.0 - dp)).powf(1.0 / dp) / std::f64::consts::PI
}

/// Evaluates every step of the branch's estimate chain on the concrete
/// fields and checks dominance of `||v - v(center)||_{L^∞(B_r)}` over the
/// assembled lower bound at each radius.
pub fn trace_lower_bound(input: TraceInput<'_>, branch: Branch, settings: &TraceSettings) -> Result<EstimateChain> {
    let red = input.reduction;
    let sys = &red.system;
    let p = sys.p;
    branch.check_exponents(p, input.q)?;
    if sys.variant != branch.variant() {
        return Err(Error::InvalidParameter(format!(
            "reduction variant {:?} does not match branch {}",
            sys.variant,
            branch.name()
        )));
    }
    if sys.masked_fraction > settings.masked_fraction_limit {
        return Err(Error::MaskedFraction {
            fraction: sys.masked_fraction,
            limit: settings.masked_fraction_limit,
        });
    }
    let grid = *input.v.grid();
    let center = settings.center;
    if !grid.contains_disc(center, OUTER_RADIUS) {
        return Err(Error::InvalidParameter(format!(
            "chains need the disc of radius {OUTER_RADIUS} about the center inside the domain"
        )));
    }
    let h = grid.spacing();
    let cal = settings.constants;

    let (a_min, a_max) = match input.coefficient {
        ReductionCoefficient::Drift(_) => (1.0, 1.0),
        ReductionCoefficient::Weight(a) => {
            let vals = (0..grid.len())
                .filter(|&k| grid.in_domain(grid.point_at(k)))
                .filter_map(|k| a.get(k));
            vals.fold((f64::INFINITY, 0.0_f64), |(lo, hi), x| (lo.min(x), hi.max(x)))
        }
    };

    // normalization
    let mut v = input.v.clone();
    let mut big_f = sys.f_big.clone();
    let mut f = red.f.clone();
    let mut steps = Vec::new();
    let norm_value = |v: &RealField, big_f: &ComplexField| -> Result<f64> {
        match branch {
            Branch::DriftL2 => {
                let e = EnergyFields::new(v, input.coefficient)?;
                let lattice = DiscLattice::new(center, L2_NORMALIZATION_RADIUS, lattice_points(L2_NORMALIZATION_RADIUS, h));
                Ok(lattice.integral(|z| e.grad_norm(z).map(|g| g.powf(p))))
            }
            Branch::WeightedHolder => {
                let c = big_f.sample_at(center).unwrap_or_default();
                Ok(closed_sup(big_f, center, 1.0, c, lattice_points(1.0, h)))
            }
            _ => {
                let e = EnergyFields::new(v, input.coefficient)?;
                let lattice = DiscLattice::new(center, 1.0, lattice_points(1.0, h));
                Ok(lattice.points.iter().filter_map(|&z| e.grad_norm(z)).fold(0.0, f64::max))
            }
        }
    };
    let mut normalization = norm_value(&v, &big_f)?;
    let mut rescaled_by = 1.0;
    if normalization < 1.0 {
        if !settings.rescale {
            return Err(Error::Normalization(format!(
                "branch {} measured {normalization} < 1",
                branch.name()
            )));
        }
        if !branch.gradient_normalized() {
            return Err(Error::Normalization(
                "the conjugate pair cannot be rescaled; supply a normalized solution".into(),
            ));
        }
        let lambda = match branch {
            Branch::DriftL2 => normalization.powf(-1.0 / p),
            _ => 1.0 / normalization,
        };
        v = v.scale(lambda);
        big_f = big_f.scale(lambda.powf(p / 2.0));
        f = f.scale(lambda.powf(p / 2.0));
        rescaled_by = lambda;
        normalization = norm_value(&v, &big_f)?;
    }
    steps.push(StepRecord::new(
        "normalization",
        match branch {
            Branch::DriftL2 => "averaged gradient normalization",
            Branch::WeightedHolder => "unit sup of the conjugate pair",
            _ => "unit gradient on the unit disc",
        },
        None,
        1.0,
        normalization,
        vec![ChainConstant::new("rescaled_by", rescaled_by, Provenance::Measured)],
    ));

    // the pair F = v + iw is taken relative to its value at the center
    if branch == Branch::WeightedHolder {
        let c = big_f.sample_at(center).unwrap_or_default();
        let shift = c;
        big_f = big_f.map(|z| z - shift);
        f = big_f.zip_map(&red.omega, |z, w| z * (-w).exp())?;
    }

    // exponential factor: a priori bound of ω through g
    let omega = &red.omega;
    let omega_sup = domain_sup(omega);
    if branch != Branch::DriftL2 {
        let q_eff = match branch {
            Branch::DriftLq => input.q.unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        };
        let delta = choose_delta(p, q_eff)?;
        let delta = if delta > 2.0 { delta } else { f64::INFINITY };
        let c_t = cauchy_holder_constant(delta, grid.domain_radius());
        let g_norm = domain_lp(&red.g, delta);
        steps.push(StepRecord::new(
            "exponential_factor",
            "Hölder bound for the Cauchy transform",
            None,
            omega_sup,
            2.0 * c_t * g_norm,
            vec![
                ChainConstant::new("delta", if delta.is_finite() { delta } else { f64::MAX }, Provenance::PaperFormula),
                ChainConstant::new("C_T", c_t, Provenance::PaperFormula),
                ChainConstant::new("g_norm", g_norm, Provenance::Measured),
                ChainConstant::new("omega_sup", omega_sup, Provenance::Measured),
            ],
        ));
    }

    // ω-norm: the representation F = f e^ω
    let active: Vec<bool> = (0..grid.len())
        .map(|k| big_f.mask()[k] && f.mask()[k] && grid.in_domain(grid.point_at(k)))
        .collect();
    let back = f.zip_map(omega, |a, w| a * w.exp())?;
    let diff = back.zip_map(&big_f, |a, b| a - b)?.restrict(&active).l2_norm();
    let base = big_f.restrict(&active).l2_norm().max(f64::MIN_POSITIVE);
    steps.push(StepRecord::new(
        "omega_norm",
        "representation through the exponential factor",
        None,
        diff / base,
        REPRESENTATION_TOLERANCE,
        vec![
            ChainConstant::new("omega_sup", omega_sup, Provenance::Measured),
            ChainConstant::new("omega_w12", red.omega_w12, Provenance::Measured),
        ],
    ));

    let energy = EnergyFields::new(&v, input.coefficient)?;
    let coefficient_m = match branch {
        Branch::DriftL2 => energy.coefficient_norm(2.0).max(1.0),
        Branch::DriftLq => energy.coefficient_norm(input.q.unwrap_or(p)).max(1.0),
        _ => energy.coefficient_norm(p).max(1.0),
    };

    let outer = energy.terms(p, center, ENERGY_RADIUS, OUTER_RADIUS)?;
    steps.push(caccioppoli_step("caccioppoli_outer", ENERGY_RADIUS, &outer, p));
    let c0 = outer.sup;
    let k7 = outer.sup_factor(p);

    let unit_sup_f = closed_sup(&f, center, 1.0, Complex64::default(), lattice_points(1.0, h));
    let unit_sup_big = closed_sup(&big_f, center, 1.0, Complex64::default(), lattice_points(1.0, h));
    let outer_l2 = l2_on_disc(&f, center, ENERGY_RADIUS);
    let ln_b_bound = if branch.gradient_normalized() {
        omega_sup + 0.5 * p * a_max.ln() + 0.5 * (k7.ln() + p * c0.ln())
    } else {
        outer_l2.ln()
    };
    let cw = cal.conjugate_c;
    let w_field = big_f.im();

    let mut radii = settings.radii.clone();
    radii.sort_by(|a, b| b.total_cmp(a));
    let mut measured = Vec::with_capacity(radii.len());
    let mut bounds = Vec::with_capacity(radii.len());
    for &r in &radii {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter(format!("dominance radius {r} must lie in (0, 1]")));
        }
        if branch == Branch::DriftL2 {
            let (mut rec, capped) = trudinger_exp_integral(omega, center, r, coefficient_m, cal.trudinger_c)?;
            rec.name = format!("exponential_factor[{r}]");
            rec.constants.push(ChainConstant::new("capped", f64::from(u8::from(capped)), Provenance::Measured));
            steps.push(rec);
        }
        let t = energy.terms(p, center, r / 2.0, r)?;
        steps.push(caccioppoli_step(&format!("caccioppoli[{r}]"), r, &t, p));
        let m_r = t.sup;
        let k_r = t.sup_factor(p);
        let mut constants = cal.tagged();

        let bound = if branch.gradient_normalized() {
            let theta = cal.theta(r);
            let a = l2_on_disc(&f, center, r / 2.0) / r;
            constants.push(ChainConstant::new("theta", theta, Provenance::Calibrated));
            constants.push(ChainConstant::new("outer_l2", outer_l2, Provenance::Measured));
            steps.push(StepRecord::new(
                &format!("three_circle[{r}]"),
                "three-circle inequality for the reduced map",
                Some(r),
                unit_sup_f,
                cal.three_circle_c * a.powf(theta) * outer_l2.powf(1.0 - theta),
                constants,
            ));
            let ln_rhs_factor = omega_sup
                + cal.three_circle_c.ln()
                + theta * (-r.ln() + omega_sup + 0.5 * p * a_max.ln() + 0.5 * k_r.ln())
                + (1.0 - theta) * ln_b_bound;
            ((unit_sup_big.ln() - ln_rhs_factor) * 2.0 / (p * theta)).exp()
        } else {
            let s = r / 2.0;
            let theta = cal.theta(s);
            let a = l2_on_disc(&f, center, s / 2.0) / s;
            constants.push(ChainConstant::new("theta", theta, Provenance::Calibrated));
            constants.push(ChainConstant::new("outer_l2", outer_l2, Provenance::Measured));
            steps.push(StepRecord::new(
                &format!("three_circle[{r}]"),
                "three-circle inequality for the reduced map",
                Some(r),
                unit_sup_f,
                cal.three_circle_c * a.powf(theta) * outer_l2.powf(1.0 - theta),
                constants,
            ));
            let pc = p / (p - 1.0);
            let area_half = std::f64::consts::PI * s * s;
            let w_osc = closed_sup(&w_field, center, s / 2.0, Complex64::new(w_field.sample_at(center).unwrap_or(0.0), 0.0), lattice_points(s / 2.0, h));
            let grad_mean = a_max.powf(pc) * t.energy_inner / area_half;
            steps.push(StepRecord::new(
                &format!("conjugate_oscillation[{r}]"),
                "oscillation of the conjugate by the gradient energy",
                Some(r),
                w_osc,
                cw * (s / 2.0) * grad_mean.powf(1.0 / pc),
                vec![
                    ChainConstant::new("C_w", cw, Provenance::Calibrated),
                    ChainConstant::new("A_max", a_max, Provenance::Measured),
                ],
            ));
            let c = cw * (s / 2.0) * (a_max.powf(pc) * k_r / area_half).powf(1.0 / pc);
            let y = ((unit_sup_big.ln() - omega_sup - cal.three_circle_c.ln() - (1.0 - theta) * ln_b_bound) / theta).exp();
            let quarter_area = std::f64::consts::PI * (s / 2.0).powi(2);
            let target = y * s * (-omega_sup).exp() / quarter_area.sqrt();
            invert_increasing(|m| m + c * m.powf(p - 1.0), target)
        };
        steps.push(StepRecord::new(
            &format!("dominance[{r}]"),
            "assembled lower bound",
            Some(r),
            bound,
            m_r,
            vec![
                ChainConstant::new("C0", c0, Provenance::Measured),
                ChainConstant::new("M", coefficient_m, Provenance::Measured),
                ChainConstant::new("A_min", a_min, Provenance::Measured),
            ],
        ));
        measured.push(m_r);
        bounds.push(bound);
    }
    Ok(EstimateChain::new(branch, p, input.q.unwrap_or(0.0), steps, radii, measured, bounds))
}

fn caccioppoli_step(name: &str, r: f64, t: &EnergyTerms, p: f64) -> StepRecord {
    StepRecord::new(
        name,
        "caccioppoli inequality before absorption",
        Some(r),
        t.energy_cut,
        t.penultimate_rhs(p),
        vec![
            ChainConstant::new("p_power", p.powf(p), Provenance::PaperFormula),
            ChainConstant::new("cutoff_norm", t.cutoff_norm, Provenance::Measured),
            ChainConstant::new("drift_norm", t.drift_norm, Provenance::Measured),
            ChainConstant::new("sup_v", t.sup, Provenance::Measured),
        ],
    )
}

/// Smallest `m >= 0` with `phi(m) >= target` for increasing `phi` with
/// `phi(m) >= m`.
fn invert_increasing(phi: impl Fn(f64) -> f64, target: f64) -> f64 {
    if !(target > 0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Traces a battery of instances in parallel.
pub fn trace_battery(items: &[(TraceInput<'_>, Branch)], settings: &TraceSettings) -> Vec<Result<EstimateChain>> {
    items
        .par_iter()
        .map(|(input, branch)| trace_lower_bound(*input, *branch, settings))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_split() {
        assert!(Branch::DriftLq.check_exponents(4.0, Some(3.0)).is_err());
        assert!(Branch::DriftLq.check_exponents(4.0, Some(4.0)).is_ok());
        assert!(Branch::DriftLq.check_exponents(2.0, Some(2.0)).is_err());
        assert!(Branch::DriftLq.check_exponents(1.5, Some(3.0)).is_ok());
        assert!(Branch::DriftL2.check_exponents(1.5, Some(2.0)).is_ok());
        assert!(Branch::DriftL2.check_exponents(3.0, Some(2.0)).is_err());
    }

    #[test]
    fn cauchy_constant_limits() {
        assert_eq!(cauchy_holder_constant(f64::INFINITY, 8.0), 16.0);
        // δ' = 1 + ε approaches the sup-norm constant
        assert!((cauchy_holder_constant(1e9, 8.0) - 16.0).abs() < 1e-5);
    }

    #[test]
    fn inversion() {
        let m = invert_increasing(|m| m + m * m, 2.0);
        assert!((m - 1.0).abs() < 1e-12);
    }
}
