use pucp_core::field::{DiskGrid, RealField, VectorField2};
use pucp_core::solver::{
    bump_gradient_l1, discrete_lipschitz, manufactured_instance, mollify_drift, solve_dirichlet,
    weak_residual, BoundaryData, Coefficient, ManufacturedKind, PLaplaceProblem,
};
use pucp_core::Complex64;

fn max_error(v: &RealField, reference: &RealField, keep: impl Fn(Complex64) -> bool) -> f64 {
    let grid = v.grid();
    (0..grid.len())
        .filter(|&k| keep(grid.point_at(k)))
        .filter_map(|k| Some((v.get(k)? - reference.get(k)?).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn affine_fixture_is_exact() {
    let grid = DiskGrid::new(128, 4.0, 16.0).unwrap();
    let inst = manufactured_instance(ManufacturedKind::Affine, 4.0, grid).unwrap();
    let (v, rep) = solve_dirichlet(&inst.problem, 1e-10, 100).unwrap();
    assert!(rep.achieved_tolerance);
    assert!(rep.final_residual <= 1e-8);
    assert!(max_error(&v, &inst.reference, |_| true) < 1e-8);
}

#[test]
fn harmonic_monomial_converges_at_second_order() {
    let mut errors = Vec::new();
    for n in [64, 128] {
        let grid = DiskGrid::new(n, 2.0, 8.0).unwrap();
        let inst =
            manufactured_instance(ManufacturedKind::HarmonicMonomial { degree: 4 }, 2.0, grid)
                .unwrap();
        let (v, _) = solve_dirichlet(&inst.problem, 1e-11, 10).unwrap();
        errors.push(max_error(&v, &inst.reference, |_| true));
    }
    let h = 8.0 / 128.0;
    assert!(errors[1] < 5.0 * h * h, "{errors:?}");
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn radial_annulus_fixture() {
    let grid = DiskGrid::new(256, 4.0, 16.0).unwrap();
    let inst = manufactured_instance(ManufacturedKind::Radial { inner: 1.0 }, 3.0, grid).unwrap();
    let (v, rep) = solve_dirichlet(&inst.problem, 1e-10, 200).unwrap();
    assert!(rep.achieved_tolerance);
    let mut worst: f64 = 0.0;
    for k in 0..grid.len() {
        let r = grid.point_at(k).norm();
        if (1.0..=4.0).contains(&r) {
            if let (Some(a), Some(b)) = (v.get(k), inst.reference.get(k)) {
                // independent oracle: r^{1/2}
                assert!((b - r.sqrt()).abs() < 1e-14);
                worst = worst.max((a - b).abs() / b);
            }
        }
    }
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn drifted_fixture_is_recovered() {
    let grid = DiskGrid::new(128, 8.0, 32.0).unwrap();
    for p in [1.5, 3.0, 4.0] {
        let inst = manufactured_instance(ManufacturedKind::Drifted, p, grid).unwrap();
        match inst.problem.coefficient() {
            Coefficient::Drift(w) => assert!(!w.is_zero()),
            Coefficient::Weight(_) => unreachable!(),
        }
        let (v, rep) = solve_dirichlet(&inst.problem, 1e-9, 200).unwrap();
        assert!(rep.achieved_tolerance, "p = {p}");
        assert!(max_error(&v, &inst.reference, |_| true) < 2e-3, "p = {p}");
    }
}

#[test]
fn weighted_constant_weight_matches_unweighted() {
    let grid = DiskGrid::new(64, 2.0, 8.0).unwrap();
    let bdry = BoundaryData::analytic(|z| z.re + 0.3 * (z * z).im);
    let a = PLaplaceProblem::weighted(
        grid,
        3.0,
        RealField::from_fn(grid, |_| 2.5),
        bdry.clone(),
        None,
    )
    .unwrap();
    let b = PLaplaceProblem::drift(grid, 3.0, VectorField2::zeros(grid), bdry, None).unwrap();
    let (va, _) = solve_dirichlet(&a, 1e-10, 200).unwrap();
    let (vb, _) = solve_dirichlet(&b, 1e-10, 200).unwrap();
    assert!(max_error(&va, &vb, |_| true) < 1e-8);
}

#[test]
fn solution_residual_is_reproducible() {
    let grid = DiskGrid::new(64, 2.0, 8.0).unwrap();
    let inst =
        manufactured_instance(ManufacturedKind::HarmonicMonomial { degree: 2 }, 3.0, grid).unwrap();
    let (v, rep) = solve_dirichlet(&inst.problem, 1e-9, 200).unwrap();
    let again = weak_residual(&inst.problem, &v, 0.0).unwrap();
    assert_eq!(again, rep.final_residual);
    let reg = weak_residual(&inst.problem, &v, inst.problem.epsilon()).unwrap();
    assert_eq!(reg, rep.regularized_residual);
}

#[test]
fn nonconvergence_returns_best_iterate() {
    let grid = DiskGrid::new(64, 2.0, 8.0).unwrap();
    let inst =
        manufactured_instance(ManufacturedKind::HarmonicMonomial { degree: 2 }, 4.0, grid).unwrap();
    let (_, rep) = solve_dirichlet(&inst.problem, 1e-14, 1).unwrap();
    assert!(!rep.achieved_tolerance);
    assert_eq!(rep.iterations, 1);
}

fn gaussian_drift(grid: DiskGrid) -> VectorField2 {
    VectorField2::from_fn(grid, |z| {
        let g = (-z.norm_sqr()).exp();
        (g, -0.5 * g)
    })
}

#[test]
fn mollifier_preserves_constants_in_the_interior() {
    let grid = DiskGrid::new(128, 2.0, 8.0).unwrap();
    let w = VectorField2::from_fn(grid, |_| (1.5, -0.25));
    let eps = 3.0 * grid.spacing();
    let m = mollify_drift(&w, eps).unwrap();
    for k in 0..grid.len() {
        let z = grid.point_at(k);
        if z.norm() < 2.0 - eps - grid.spacing() {
            let (a, b) = m.at(k);
            assert!((a - 1.5).abs() < 1e-12 && (b + 0.25).abs() < 1e-12);
        }
        if m.mask()[k] {
            assert!(z.norm() < 2.0 + eps);
        }
    }
}

#[test]
fn mollifier_is_an_lq_contraction() {
    let grid = DiskGrid::new(128, 2.0, 8.0).unwrap();
    let w = gaussian_drift(grid);
    let m = mollify_drift(&w, 4.0 * grid.spacing()).unwrap();
    for q in [2.0, 4.0, 8.0] {
        assert!(m.lq_norm(q) <= w.lq_norm(q) * (1.0 + 1e-3));
    }
}

#[test]
fn mollified_drift_lipschitz_bound() {
    let grid = DiskGrid::new(128, 2.0, 8.0).unwrap();
    // discontinuous drift: indicator of a half disk
    let w = VectorField2::from_fn(grid, |z| if z.re > 0.0 { (1.0, 0.0) } else { (0.0, 0.0) });
    let eps = 6.0 * grid.spacing();
    let m = mollify_drift(&w, eps).unwrap();
    let sup = w.magnitude().sup_modulus();
    assert!(discrete_lipschitz(&m) <= sup * bump_gradient_l1(eps) * 1.05);
}
