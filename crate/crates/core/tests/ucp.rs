use std::f64::consts::PI;

use pucp_core::beltrami::{reduce, AssembleOptions, BeltramiVariant, ReduceSettings, ReductionCoefficient, ReductionResult};
use pucp_core::field::{gradient, AnalyticField, ComplexField, DiskGrid, RealField, VectorField2};
use pucp_core::singular::TransformPlan;
use pucp_core::solver::{manufactured_instance, solve_dirichlet, BoundaryData, Coefficient, ManufacturedKind, PLaplaceProblem};
use pucp_core::ucp::{
    caccioppoli_check, calibrate_reference, corrupt_omega, cutoff, cutoff_gradient, landis_infsup,
    rescale_bourgain_kenig, sucp_contradiction_test, trace_battery, trace_lower_bound, trudinger_exp_integral,
    Branch, CalibratedConstants, EstimateChain, Provenance, RescaleParams, SucpVerdict, TraceInput, TraceSettings,
    REFERENCE_DEGREES,
};
use pucp_core::{Complex64, Error};

const O: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct Solved {
    p: f64,
    q: Option<f64>,
    branch: Branch,
    v: RealField,
    coef: ReductionCoefficient,
    red: ReductionResult,
}

impl Solved {
    fn input(&self) -> TraceInput<'_> {
        TraceInput {
            v: &self.v,
            coefficient: &self.coef,
            reduction: &self.red,
            q: self.q,
        }
    }
}

fn drifted(p: f64, q: f64, branch: Branch, grid: DiskGrid) -> Solved {
    let inst = manufactured_instance(ManufacturedKind::Drifted, p, grid).unwrap();
    let (v, rep) = solve_dirichlet(&inst.problem, 1e-9, 200).unwrap();
    assert!(rep.achieved_tolerance, "p = {p}");
    let w = match inst.problem.coefficient() {
        Coefficient::Drift(w) => w.clone(),
        Coefficient::Weight(_) => unreachable!(),
    };
    let coef = ReductionCoefficient::Drift(w);
    let settings = ReduceSettings {
        assemble: AssembleOptions {
            q: Some(q),
            ..Default::default()
        },
        ..Default::default()
    };
    let red = reduce(&v, &coef, p, BeltramiVariant::Drift, &settings, &TransformPlan::new(grid)).unwrap();
    Solved {
        p,
        q: Some(q),
        branch,
        v,
        coef,
        red,
    }
}

fn weighted(p: f64, branch: Branch, grid: DiskGrid) -> Solved {
    let weight = RealField::from_fn_everywhere(grid, |z| 1.0 + 0.2 * (0.3 * z.re).sin() * (0.2 * z.im).cos());
    let problem = PLaplaceProblem::weighted(
        grid,
        p,
        weight.clone(),
        BoundaryData::analytic(|z: Complex64| 1.2 * z.re + 0.1 * z.im),
        None,
    )
    .unwrap();
    let (v, rep) = solve_dirichlet(&problem, 1e-9, 200).unwrap();
    assert!(rep.achieved_tolerance, "p = {p}");
    let coef = ReductionCoefficient::Weight(weight);
    let red = reduce(
        &v,
        &coef,
        p,
        branch.variant(),
        &ReduceSettings::default(),
        &TransformPlan::new(grid),
    )
    .unwrap();
    Solved {
        p,
        q: None,
        branch,
        v,
        coef,
        red,
    }
}

fn reference(grid: DiskGrid) -> Solved {
    let v = RealField::from_fn(grid, |z| z.re);
    let coef = ReductionCoefficient::Drift(VectorField2::zeros(grid));
    let settings = ReduceSettings {
        assemble: AssembleOptions {
            q: Some(4.0),
            ..Default::default()
        },
        ..Default::default()
    };
    let red = reduce(&v, &coef, 2.0, BeltramiVariant::Drift, &settings, &TransformPlan::new(grid)).unwrap();
    Solved {
        p: 2.0,
        q: Some(4.0),
        branch: Branch::DriftLq,
        v,
        coef,
        red,
    }
}

fn assert_all_pass(chain: &EstimateChain, label: &str) {
    for s in &chain.steps {
        assert!(s.passes, "{label}: step {} lhs {} rhs {}", s.name, s.lhs, s.rhs);
    }
    assert!(chain.passes, "{label}");
}

/// `∫_1^2 g(s) ds` by composite Simpson.
fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn calibration_is_reproducible_and_conservative() {
    let frozen = CalibratedConstants::default();
    let fitted = calibrate_reference().unwrap();
    assert!((fitted.e / frozen.e - 1.0).abs() < 1e-9);
    assert!((fitted.e_prime / frozen.e_prime - 1.0).abs() < 1e-9);
    assert_eq!(fitted.conjugate_c, frozen.conjugate_c);
    // closed-form equality exponent for f = N z^{N-1}:
    // sup_{B_1} |f| = N, ||f||_{L^2(B_ρ)} = N sqrt(π/N) ρ^N
    for n in REFERENCE_DEGREES {
        let nf = f64::from(n);
        let l2 = |rho: f64| nf * (PI / nf).sqrt() * rho.powf(nf);
        for j in 1..=10 {
            let r = 0.5_f64.powi(j);
            let (a, b) = (l2(r / 2.0) / r, l2(7.0));
            let theta_star = (b / nf).ln() / (b / a).ln();
            assert!(frozen.theta(r) <= theta_star, "N = {n}, r = {r}");
        }
    }
}

#[test]
fn cutoff_profile() {
    assert_eq!(cutoff(0.5, 1.0, 2.0), 1.0);
    assert_eq!(cutoff(2.5, 1.0, 2.0), 0.0);
    assert!((cutoff(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
    assert!(cutoff_gradient(1.5, 1.0, 2.0) <= 4.0);
}

#[test]
fn caccioppoli_on_closed_forms() {
    let grid = DiskGrid::new(256, 8.0, 32.0).unwrap();
    let none = ReductionCoefficient::Drift(VectorField2::zeros(grid));
    let constant = RealField::from_fn(grid, |_| 3.0);
    let rep = caccioppoli_check(&constant, &none, 2.0, O, 1.0, 2.0).unwrap();
    assert_eq!(rep.packaged.lhs, 0.0);
    assert!(rep.packaged.passes && rep.penultimate.passes);

    let v = RealField::from_fn(grid, |z| z.re);
    for p in [1.5, 2.0, 4.0] {
        let rep = caccioppoli_check(&v, &none, p, O, 1.0, 2.0).unwrap();
        assert!((rep.packaged.lhs - PI).abs() < 1e-2, "p = {p}: {}", rep.packaged.lhs);
        // polar oracle: ∫|x|^p|∇η|^p = ∫_0^{2π}|cos t|^p dt · ∫_1^2 s^{p+1} η'(s)^p ds
        let angular = simpson(|t| t.cos().abs().powf(p), 0.0, 2.0 * PI, 4000);
        let radial = simpson(|s| s.powf(p + 1.0) * cutoff_gradient(s, 1.0, 2.0).powf(p), 1.0, 2.0, 4000);
        let rhs = p.powf(p) * angular * radial;
        assert!((rep.penultimate.rhs / rhs - 1.0).abs() < 1e-2, "p = {p}: {} vs {rhs}", rep.penultimate.rhs);
        let lhs = 2.0 * PI * simpson(|s| s * cutoff(s, 1.0, 2.0).powf(p), 0.0, 2.0, 4000);
        assert!((rep.penultimate.lhs / lhs - 1.0).abs() < 1e-2);
        assert!(rep.penultimate.rhs > PI && rep.penultimate.passes);
        assert!(rep.guard_active);
    }
}

#[test]
fn caccioppoli_on_solved_instances() {
    let grid = DiskGrid::new(256, 8.0, 32.0).unwrap();
    for s in [
        drifted(4.0, 5.0, Branch::DriftLq, grid),
        drifted(1.5, 3.0, Branch::DriftLq, grid),
        weighted(3.0, Branch::WeightedLip, grid),
    ] {
        for (r, rho) in [(1.0, 2.0), (0.5, 3.0), (2.0, 6.0)] {
            let rep = caccioppoli_check(&s.v, &s.coef, s.p, O, r, rho).unwrap();
            assert!(rep.penultimate.slack >= 0.0, "p = {} r = {r}", s.p);
            assert!(rep.packaged.slack >= 0.0, "p = {} r = {r}", s.p);
        }
    }
    let v = RealField::from_fn(grid, |z| z.re);
    let none = ReductionCoefficient::Drift(VectorField2::zeros(grid));
    assert!(matches!(
        caccioppoli_check(&v, &none, 2.0, O, 2.0, 9.0),
        Err(Error::DiscOutsideDomain { .. })
    ));
    assert!(caccioppoli_check(&v, &none, 2.0, O, 2.0, 1.0).is_err());
}

#[test]
fn trudinger_integral() {
    let grid = DiskGrid::new(512, 8.0, 32.0).unwrap();
    let zero = ComplexField::zeros(grid);
    let (rec, capped) = trudinger_exp_integral(&zero, O, 1.0, 1.0, 1.0).unwrap();
    assert_eq!(rec.lhs, 1.0);
    assert!(!capped && rec.passes);

    // ω = c log(1/max(|z|, ε)) on B_1, zero outside; e^{2ω} = max(|z|, ε)^{-2c}
    let (c, eps) = (0.25, 0.25);
    let omega = ComplexField::from_fn(grid, move |z| {
        Complex64::new(c * (1.0 / z.norm().max(eps)).ln().max(0.0), 0.0)
    });
    let (rec, _) = trudinger_exp_integral(&omega, O, 1.0, 1.0, 1.0).unwrap();
    let a = 0.5_f64;
    let inner = eps.powf(-2.0 * c) * eps * eps / 2.0;
    let outer = (a.powf(2.0 - 2.0 * c) - eps.powf(2.0 - 2.0 * c)) / (2.0 - 2.0 * c);
    let mean = 2.0 * PI * (inner + outer) / (PI * a * a);
    assert!((rec.lhs / mean - 1.0).abs() < 1e-2, "{} vs {mean}", rec.lhs);

    let big = ComplexField::from_fn(grid, |_| Complex64::new(80.0, 0.0));
    let (_, capped) = trudinger_exp_integral(&big, O, 1.0, 1.0, 1.0).unwrap();
    assert!(capped);
}

#[test]
fn trudinger_on_q2_pipeline() {
    let s = drifted(1.5, 2.0, Branch::DriftL2, DiskGrid::new(256, 8.0, 32.0).unwrap());
    for r in [0.5, 0.125, 0.03125] {
        let (rec, capped) = trudinger_exp_integral(&s.red.omega, O, r, s.red.system.m_bound, 1.0).unwrap();
        assert!(rec.passes && !capped, "r = {r}: {} vs {}", rec.lhs, rec.rhs);
    }
}

#[test]
fn reference_chain_passes_with_exact_measurements() {
    let grid = DiskGrid::new(256, 8.0, 32.0).unwrap();
    let s = reference(grid);
    let settings = TraceSettings {
        radii: vec![1e-1, 1e-2, 1e-3],
        ..Default::default()
    };
    let chain = trace_lower_bound(s.input(), Branch::DriftLq, &settings).unwrap();
    assert_all_pass(&chain, "reference");
    for (r, m) in chain.radii.iter().zip(&chain.measured) {
        assert!((m / r - 1.0).abs() < 1e-9, "r = {r}: {m}");
    }
    for (b, m) in chain.bounds.iter().zip(&chain.measured) {
        assert!(b <= m);
    }
    let exp = chain.step("exponential_factor").unwrap();
    assert_eq!((exp.lhs, exp.rhs), (0.0, 0.0));
    for c in chain.constants() {
        assert!(c.value.is_finite(), "{}", c.name);
    }
    assert!(chain.constants().any(|c| c.provenance == Provenance::Calibrated));
}

#[test]
fn drifted_p4_chain_and_corrupted_control() {
    let s = drifted(4.0, 5.0, Branch::DriftLq, DiskGrid::new(512, 8.0, 32.0).unwrap());
    let settings = TraceSettings::default();
    let chain = trace_lower_bound(s.input(), Branch::DriftLq, &settings).unwrap();
    assert_all_pass(&chain, "p = 4");
    assert_eq!(chain.radii.len(), 7);

    let bad = corrupt_omega(&s.red, 10.0);
    let input = TraceInput {
        reduction: &bad,
        ..s.input()
    };
    let chain = trace_lower_bound(input, Branch::DriftLq, &settings).unwrap();
    assert!(!chain.passes);
    assert_eq!(chain.first_failure.as_deref(), Some("exponential_factor"));
}

#[test]
fn chain_preconditions() {
    let grid = DiskGrid::new(128, 8.0, 32.0).unwrap();
    let s = drifted(4.0, 5.0, Branch::DriftLq, grid);
    let settings = TraceSettings::default();
    let wrong_q = TraceInput { q: Some(3.0), ..s.input() };
    assert!(matches!(trace_lower_bound(wrong_q, Branch::DriftLq, &settings), Err(Error::InvalidParameter(_))));
    assert!(trace_lower_bound(s.input(), Branch::WeightedLip, &settings).is_err());

    let strict = TraceSettings {
        masked_fraction_limit: -1.0,
        ..Default::default()
    };
    assert!(matches!(
        trace_lower_bound(s.input(), Branch::DriftLq, &strict),
        Err(Error::MaskedFraction { .. })
    ));

    // a solution scaled below the normalization is refused, or rescaled on request
    let small = s.v.scale(0.5);
    let input = TraceInput { v: &small, ..s.input() };
    assert!(matches!(
        trace_lower_bound(input, Branch::DriftLq, &settings),
        Err(Error::Normalization(_))
    ));
    let rescale = TraceSettings {
        rescale: true,
        ..Default::default()
    };
    let chain = trace_lower_bound(input, Branch::DriftLq, &rescale).unwrap();
    let norm = chain.step("normalization").unwrap();
    assert!((norm.rhs - 1.0).abs() < 1e-9);
}

#[test]
fn battery_chains_pass() {
    let grid = DiskGrid::new(256, 8.0, 32.0).unwrap();
    let mut battery = Vec::new();
    for p in [1.5, 2.0, 3.0, 4.0] {
        battery.push(drifted(p, p.max(2.0) + 1.0, Branch::DriftLq, grid));
        battery.push(weighted(p, Branch::WeightedLip, grid));
    }
    for p in [1.5, 2.0] {
        battery.push(drifted(p, 2.0, Branch::DriftL2, grid));
    }
    for p in [1.5, 3.0] {
        battery.push(weighted(p, Branch::WeightedHolder, grid));
    }
    let items: Vec<_> = battery.iter().map(|s| (s.input(), s.branch)).collect();
    let chains = trace_battery(&items, &TraceSettings::default());
    for (s, chain) in battery.iter().zip(chains) {
        let chain = chain.unwrap_or_else(|e| panic!("{:?} p = {}: {e}", s.branch, s.p));
        assert_all_pass(&chain, &format!("{:?} p = {}", s.branch, s.p));
        for step in &chain.steps {
            assert!(step.slack >= -1e-6 * (step.lhs.abs() + step.rhs.abs()));
        }
    }
}

#[test]
fn sucp_verdicts() {
    let quartic = AnalyticField::real(|z| z.powu(4).re).with_boundary(256);
    let rep = sucp_contradiction_test(&quartic, O, 1.0 / 64.0, 1.0, 12.0).unwrap();
    match rep.verdict {
        SucpVerdict::FiniteOrder { beta } => assert!((beta - 4.0).abs() < 1e-6, "{beta}"),
        v => panic!("{v:?}"),
    }
    let three = AnalyticField::real(|_| 3.0);
    let rep = sucp_contradiction_test(&three, O, 1.0 / 64.0, 1.0, 12.0).unwrap();
    assert_eq!(rep.verdict, SucpVerdict::Constant);

    let flat = AnalyticField::real(|z| if z.norm() == 0.0 { 0.0 } else { (-1.0 / z.norm()).exp() }).with_boundary(256);
    let rep = sucp_contradiction_test(&flat, O, 1.0 / 256.0, 1.0, 12.0).unwrap();
    assert!(matches!(rep.verdict, SucpVerdict::SucpViolationCandidate { .. }), "{:?}", rep.verdict);
}

#[test]
fn sucp_never_fires_on_solutions() {
    let grid = DiskGrid::new(512, 8.0, 32.0).unwrap();
    for s in [drifted(3.0, 4.0, Branch::DriftLq, grid), weighted(1.5, Branch::WeightedLip, grid)] {
        let rep = sucp_contradiction_test(&s.v, O, 0.25, 8.0, 12.0).unwrap();
        match rep.verdict {
            SucpVerdict::FiniteOrder { beta } => assert!((beta - 1.0).abs() < 0.1, "{beta}"),
            v => panic!("p = {}: {v:?}", s.p),
        }
    }
}

#[test]
fn rescaling_affine_and_zero_data() {
    let window = DiskGrid::new(512, 96.0, 384.0).unwrap();
    let target = DiskGrid::new(128, 8.0, 32.0).unwrap();
    let u = RealField::from_fn(window, |z| z.re);
    let params = RescaleParams::new(10.0, Complex64::new(10.0, 0.0), 4.0).unwrap();
    let out = rescale_bourgain_kenig(&u, &VectorField2::zeros(window), &params, &target, 1e-2).unwrap();
    let (gx, gy) = gradient(&out.u);
    let at = Complex64::new(-1.0, 0.0);
    let g = gx.sample_at(at).unwrap().hypot(gy.sample_at(at).unwrap());
    assert!((g - 10.0).abs() < 1e-9, "{g}");
    assert!(out.w.is_zero() && out.measured == 0.0 && out.passes);

    assert!(RescaleParams::new(10.0, Complex64::new(9.0, 0.0), 4.0).is_err());
    assert!(RescaleParams::new(0.5, Complex64::new(0.5, 0.0), 4.0).is_err());
    let far = RescaleParams::new(20.0, Complex64::new(0.0, 20.0), 4.0).unwrap();
    assert!(matches!(
        rescale_bourgain_kenig(&u, &VectorField2::zeros(window), &far, &target, 1e-2),
        Err(Error::WindowTooSmall(_))
    ));
}

#[test]
fn rescaled_gaussian_norms() {
    let sigma: f64 = 8.0;
    let target = DiskGrid::new(256, 8.0, 32.0).unwrap();
    for (q, r, angle) in [(4.0, 16.0, 0.3), (6.0, 32.0, 2.0), (2.0, 16.0, -1.0)] {
        let reach = 9.0 * r;
        let window = DiskGrid::new(1024, reach, 4.0 * reach).unwrap();
        let w = VectorField2::from_fn(window, |z| {
            let g = (-z.norm_sqr() / (2.0 * sigma * sigma)).exp();
            (g, 0.5 * g)
        });
        let u = RealField::zeros(window);
        let params = RescaleParams::new(r, Complex64::from_polar(r, angle), q).unwrap();
        let out = rescale_bourgain_kenig(&u, &w, &params, &target, 1e-2).unwrap();
        // |W| = sqrt(5/4) g, so ||W||_q^q = (5/4)^{q/2} 2πσ²/q
        let exact = (1.25_f64.powf(q / 2.0) * 2.0 * PI * sigma * sigma / q).powf(1.0 / q);
        assert!((out.source_norm / exact - 1.0).abs() < 1e-6, "q = {q}");
        assert!(out.passes, "q = {q}: {} vs {}", out.measured, out.bound);
        assert!((out.measured / out.bound - 1.0).abs() < 1e-2, "q = {q}");
        assert!((out.bound - r.powf(1.0 - 2.0 / q) * exact).abs() < 1e-5 * out.bound);
    }
}

#[test]
fn landis_curves() {
    let grid = DiskGrid::new(512, 12.0, 48.0).unwrap();
    let c = RealField::from_fn(grid, |_| 2.5);
    assert_eq!(landis_infsup(&c, 5.0, 64, 0.0).unwrap(), 2.5);

    let x = RealField::from_fn(grid, |z| z.re);
    let v = landis_infsup(&x, 5.0, 64, 0.0).unwrap();
    assert!((v - 1.0).abs() < 1e-9, "{v}");

    let decay = RealField::from_fn(grid, |z| (-z.norm()).exp());
    let v = landis_infsup(&decay, 5.0, 128, 0.0).unwrap();
    let h = grid.spacing();
    assert!((v / (-4.0_f64).exp() - 1.0).abs() < h * h, "{v}");
    let curve: Vec<f64> = [2.0, 4.0, 6.0, 8.0, 10.0]
        .iter()
        .map(|&r| landis_infsup(&decay, r, 64, 0.0).unwrap())
        .collect();
    assert!(curve.windows(2).all(|w| w[1] <= w[0]));

    assert!(matches!(landis_infsup(&x, 11.5, 64, 0.0), Err(Error::WindowTooSmall(_))));
    assert!(landis_infsup(&x, 5.0, 32, 0.0).is_err());
}
