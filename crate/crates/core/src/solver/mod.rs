//! Dirichlet solvers for the drift and weighted p-Laplace equations.
//!
//! The drift equation `div(|∇v|^{p-2}∇v) + W·(|∇v|^{p-2}∇v) = 0` and the
//! weighted equation `div(A|∇v|^{p-2}∇v) = 0` are discretized in conservative
//! five-point form. Edge fluxes use the regularized coefficient
//! `(|∇v|^2 + ε^2)^{(p-2)/2}` evaluated from an edge gradient; the drift term is
//! a centered node term. A damped Picard iteration freezes the coefficient and
//! solves the resulting linear system by ILU(0)-preconditioned CG (symmetric
//! case) or BiCGSTAB (with drift).

pub(crate) mod linear;
mod manufactured;
mod mollify;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DiskGrid, RealField, VectorField2};
use linear::{bicgstab, pcg, FivePoint, EAST, NORTH, SOUTH, WEST};

pub use linear::KrylovOutcome;
pub use manufactured::{
    manufactured_instance, DriftProfile, ManufacturedInstance, ManufacturedKind, DRIFTED_EPSILON,
};
pub use mollify::{bump_gradient_l1, discrete_lipschitz, mollify_drift};

/// Norm of the gradient of a unit hat test function on the five-point lattice.
pub const HAT_GRADIENT_NORM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Drift,
    Weighted,
}

/// Where the equation is posed, relative to the grid center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// The domain disk `|z - c| < R`.
    Disk,
    /// `inner < |z - c| < R`.
    Annulus { inner: f64 },
}

impl Region {
    fn contains(&self, grid: &DiskGrid, z: Complex64) -> bool {
        let d = (z - grid.center()).norm();
        match *self {
            Region::Disk => d < grid.domain_radius(),
            Region::Annulus { inner } => d > inner && d < grid.domain_radius(),
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// Dirichlet data, evaluated on the ring of grid nodes just outside the region.
#[derive(Clone)]
pub enum BoundaryData {
    Analytic(ScalarFn),
    /// Bilinear interpolation of a previously computed field.
    Field(RealField),
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Analytic(_) => f.write_str("BoundaryData::Analytic"),
            BoundaryData::Field(g) => write!(f, "BoundaryData::Field({:?})", g.grid()),
        }
    }
}

impl BoundaryData {
    pub fn analytic(f: impl Fn(Complex64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Analytic(Arc::new(f))
    }

    fn value(&self, z: Complex64) -> Result<f64> {
        match self {
            BoundaryData::Analytic(f) => Ok(f(z)),
            BoundaryData::Field(g) => g.sample_at(z).ok_or_else(|| {
                Error::InvalidParameter(format!("boundary field does not cover {z}"))
            }),
        }
    }
}

/// The lower-order coefficient: a drift `W` or a positive weight `A`.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Drift(VectorField2),
    Weight(RealField),
}

#[derive(Debug, Clone)]
pub struct PLaplaceProblem {
    grid: DiskGrid,
    p: f64,
    coefficient: Coefficient,
    boundary: BoundaryData,
    epsilon: f64,
    region: Region,
}

impl PLaplaceProblem {
    /// Drift variant. `epsilon = None` uses the grid spacing.
    pub fn drift(
        grid: DiskGrid,
        p: f64,
        drift: VectorField2,
        boundary: BoundaryData,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        grid.ensure_same(drift.grid())?;
        Self::build(grid, p, Coefficient::Drift(drift), boundary, epsilon)
    }

    /// Weighted variant; the weight must be bounded below by a positive
    /// constant on the domain.
    pub fn weighted(
        grid: DiskGrid,
        p: f64,
        weight: RealField,
        boundary: BoundaryData,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        grid.ensure_same(weight.grid())?;
        let min = (0..grid.len())
            .filter(|&k| grid.in_domain(grid.point_at(k)))
            .map(|k| weight.get(k).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight must be positive on the domain (min {min})"
            )));
        }
        Self::build(grid, p, Coefficient::Weight(weight), boundary, epsilon)
    }

    fn build(
        grid: DiskGrid,
        p: f64,
        coefficient: Coefficient,
        boundary: BoundaryData,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent p = {p} must exceed 1"
            )));
        }
        let epsilon = epsilon.unwrap_or(grid.spacing());
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization {epsilon} must be positive"
            )));
        }
        Ok(Self {
            grid,
            p,
            coefficient,
            boundary,
            epsilon,
            region: Region::Disk,
        })
    }

    pub fn with_region(mut self, region: Region) -> Result<Self> {
        if let Region::Annulus { inner } = region {
            if !(inner > 0.0 && inner < self.grid.domain_radius()) {
                return Err(Error::InvalidParameter(format!(
                    "annulus inner radius {inner} invalid"
                )));
            }
        }
        self.region = region;
        Ok(self)
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn variant(&self) -> Variant {
        match self.coefficient {
            Coefficient::Drift(_) => Variant::Drift,
            Coefficient::Weight(_) => Variant::Weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Weak residual of the unregularized equation, `max_i |r_i| / ||∇η_i||`.
    pub final_residual: f64,
    /// The same quantity for the ε-regularized equation actually solved.
    pub regularized_residual: f64,
    pub residual_history: Vec<f64>,
    pub damping_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub epsilon: f64,
    /// Whether the regularized residual reached the requested tolerance.
    pub achieved_tolerance: bool,
}

/// Node classification for a region on a grid.
struct Layout {
    grid: DiskGrid,
    /// grid index of each unknown, row-major
    interior: Vec<usize>,
    /// unknown number of each grid index
    local: Vec<Option<usize>>,
    /// interior or Dirichlet ring
    known: Vec<bool>,
}

impl Layout {
    fn new(grid: DiskGrid, region: Region) -> Self {
        let n = grid.n_per_side();
        let inside: Vec<bool> = grid.points().map(|z| region.contains(&grid, z)).collect();
        let mut interior = Vec::new();
        let mut local = vec![None; grid.len()];
        let mut known = inside.clone();
        for k in 0..grid.len() {
            if inside[k] {
                let (r, c) = grid.row_col(k);
                // keep one layer away from the torus edge
                if r == 0 || c == 0 || r + 1 >= n || c + 1 >= n {
                    known[k] = false;
                    continue;
                }
                local[k] = Some(interior.len());
                interior.push(k);
            }
        }
        for &k in &interior {
            for j in [k + 1, k - 1, k + n, k - n] {
                known[j] = true;
            }
        }
        Self {
            grid,
            interior,
            local,
            known,
        }
    }

    #[inline]
    fn neighbors(&self, k: usize) -> [usize; 4] {
        let n = self.grid.n_per_side();
        [k + 1, k - 1, k + n, k - n]
    }
}

/// State shared by residual evaluation and matrix assembly.
struct Discretization<'a> {
    layout: Layout,
    problem: &'a PLaplaceProblem,
    drift: Vec<(f64, f64)>,
    weight: Vec<f64>,
}

impl<'a> Discretization<'a> {
    fn new(problem: &'a PLaplaceProblem) -> Self {
        let layout = Layout::new(problem.grid, problem.region);
        let len = problem.grid.len();
        let (drift, weight) = match &problem.coefficient {
            Coefficient::Drift(w) => ((0..len).map(|k| w.at(k)).collect(), vec![1.0; len]),
            Coefficient::Weight(a) => {
                let weight = (0..len).map(|k| a.get(k).unwrap_or(f64::NAN)).collect();
                (vec![(0.0, 0.0); len], weight)
            }
        };
        Self {
            layout,
            problem,
            drift,
            weight,
        }
    }

    /// Derivative along one axis at a known node.
    fn axis_derivative(&self, u: &[f64], k: usize, plus: usize, minus: usize) -> f64 {
        let h = self.layout.grid.spacing();
        let known = &self.layout.known;
        match (known[plus], known[minus]) {
            (true, true) => (u[plus] - u[minus]) / (2.0 * h),
            (true, false) => (u[plus] - u[k]) / h,
            (false, true) => (u[k] - u[minus]) / h,
            (false, false) => 0.0,
        }
    }

    fn node_gradient(&self, u: &[f64], k: usize) -> (f64, f64) {
        let [e, w, nn, s] = self.layout.neighbors(k);
        (
            self.axis_derivative(u, k, e, w),
            self.axis_derivative(u, k, nn, s),
        )
    }

    fn edge_weight(&self, k: usize, j: usize) -> f64 {
        let (a, b) = (self.weight[k], self.weight[j]);
        match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a,
            (false, true) => b,
            (false, false) => 1.0,
        }
    }

    /// `A_e (|g_e|^2 + eps^2)^{(p-2)/2}` for the edge from `k` to neighbor `j`
    /// in direction `dir`.
    fn edge_coefficient(
        &self,
        u: &[f64],
        grads: &[(f64, f64)],
        k: usize,
        j: usize,
        dir: usize,
        eps: f64,
    ) -> f64 {
        let h = self.layout.grid.spacing();
        let normal = (u[j] - u[k]) / h;
        let tangential = match dir {
            EAST | WEST => 0.5 * (grads[k].1 + grads[j].1),
            _ => 0.5 * (grads[k].0 + grads[j].0),
        };
        let s = normal * normal + tangential * tangential + eps * eps;
        let kappa = if s > 0.0 {
            s.powf(0.5 * (self.problem.p - 2.0))
        } else {
            0.0
        };
        self.edge_weight(k, j) * kappa
    }

    fn node_coefficient(&self, g: (f64, f64), eps: f64) -> f64 {
        let s = g.0 * g.0 + g.1 * g.1 + eps * eps;
        if s > 0.0 {
            s.powf(0.5 * (self.problem.p - 2.0))
        } else {
            0.0
        }
    }

    fn gradients(&self, u: &[f64]) -> Vec<(f64, f64)> {
        (0..u.len())
            .map(|k| {
                if self.layout.known[k] {
                    self.node_gradient(u, k)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect()
    }

    /// Nonlinear residual at every unknown (divergence form times `h^2`).
    fn residual(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let grads = self.gradients(u);
        let h = self.layout.grid.spacing();
        self.layout
            .interior
            .iter()
            .map(|&k| {
                let nb = self.layout.neighbors(k);
                let mut r = 0.0;
                for (dir, &j) in nb.iter().enumerate() {
                    r += self.edge_coefficient(u, &grads, k, j, dir, eps) * (u[j] - u[k]);
                }
                let (w1, w2) = self.drift[k];
                if w1 != 0.0 || w2 != 0.0 {
                    let g = grads[k];
                    r += h * h * self.node_coefficient(g, eps) * (w1 * g.0 + w2 * g.1);
                }
                r
            })
            .collect()
    }

    fn weak_residual(&self, u: &[f64], eps: f64) -> f64 {
        self.residual(u, eps)
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
            / HAT_GRADIENT_NORM
    }

    /// Linear system for the coefficients frozen at `u` (`frozen = false`
    /// replaces them by one: the Laplace/convection start).
    fn assemble(&self, u: &[f64], eps: f64, frozen: bool) -> (FivePoint, Vec<f64>) {
        let grads = self.gradients(u);
        let h = self.layout.grid.spacing();
        let m = self.layout.interior.len();
        let mut diag = vec![0.0; m];
        let mut off = vec![[0.0; 4]; m];
        let mut nbr = vec![[None; 4]; m];
        let mut rhs = vec![0.0; m];
        for (i, &k) in self.layout.interior.iter().enumerate() {
            let nb = self.layout.neighbors(k);
            let mut coeff = [0.0; 4];
            for (dir, &j) in nb.iter().enumerate() {
                let c = if frozen {
                    self.edge_coefficient(u, &grads, k, j, dir, eps)
                } else {
                    self.edge_weight(k, j)
                };
                diag[i] += c;
                coeff[dir] = -c;
            }
            let (w1, w2) = self.drift[k];
            if w1 != 0.0 || w2 != 0.0 {
                let kn = if frozen {
                    self.node_coefficient(grads[k], eps)
                } else {
                    1.0
                };
                let t = 0.5 * h * kn;
                coeff[EAST] -= t * w1;
                coeff[WEST] += t * w1;
                coeff[NORTH] -= t * w2;
                coeff[SOUTH] += t * w2;
            }
            for (dir, &j) in nb.iter().enumerate() {
                match self.layout.local[j] {
                    Some(l) => {
                        nbr[i][dir] = Some(l);
                        off[i][dir] = coeff[dir];
                    }
                    None => rhs[i] -= coeff[dir] * u[j],
                }
            }
        }
        (FivePoint { diag, off, nbr }, rhs)
    }

    fn linear_solve(&self, a: &FivePoint, b: &[f64], x: &mut [f64]) -> KrylovOutcome {
        let max_iter = 20 * (self.layout.grid.n_per_side() + 50);
        if a.is_symmetric() {
            pcg(a, b, x, 1e-13, max_iter)
        } else {
            bicgstab(a, b, x, 1e-13, max_iter)
        }
    }
}

/// Solves the Dirichlet problem; returns the best iterate and a report. The
/// returned field is supported on the region plus its Dirichlet ring.
pub fn solve_dirichlet(
    problem: &PLaplaceProblem,
    tol: f64,
    max_iter: usize,
) -> Result<(RealField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let disc = Discretization::new(problem);
    let grid = problem.grid;
    let eps = problem.epsilon;
    if disc.layout.interior.is_empty() {
        return Err(Error::InvalidParameter(
            "region contains no grid nodes".into(),
        ));
    }
    let mut u = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        if disc.layout.known[k] && disc.layout.local[k].is_none() {
            u[k] = problem.boundary.value(grid.point_at(k))?;
        }
    }
    let mut report = SolveReport {
        iterations: 0,
        final_residual: f64::NAN,
        regularized_residual: f64::NAN,
        residual_history: Vec::new(),
        damping_history: Vec::new(),
        linear_iterations: Vec::new(),
        epsilon: eps,
        achieved_tolerance: false,
    };
    // start from the p = 2 problem with the same lower-order coefficient
    let (a, b) = disc.assemble(&u, eps, false);
    let mut x = vec![0.0; a.len()];
    let out = disc.linear_solve(&a, &b, &mut x);
    report.linear_iterations.push(out.iterations);
    scatter(&disc.layout, &x, &mut u);
    let mut res = disc.weak_residual(&u, eps);
    report.residual_history.push(res);
    let mut anderson = Anderson::new(ANDERSON_DEPTH);
    while report.iterations < max_iter && res > tol {
        let (a, b) = disc.assemble(&u, eps, true);
        let current: Vec<f64> = disc.layout.interior.iter().map(|&k| u[k]).collect();
        let mut x = current.clone();
        let out = disc.linear_solve(&a, &b, &mut x);
        report.linear_iterations.push(out.iterations);
        let picard: Vec<f64> = x.iter().zip(&current).map(|(g, c)| g - c).collect();
        let mut trial = u.clone();
        let mut accepted = None;
        if let Some(step) = anderson.step(&current, &picard) {
            scatter(&disc.layout, &step, &mut trial);
            let r = disc.weak_residual(&trial, eps);
            if r < res {
                accepted = Some((1.0, r));
            } else {
                anderson.reset();
            }
        }
        if accepted.is_none() {
            let mut theta = 1.0;
            while theta >= MIN_DAMPING {
                for (i, &k) in disc.layout.interior.iter().enumerate() {
                    trial[k] = current[i] + theta * picard[i];
                }
                let r = disc.weak_residual(&trial, eps);
                if r < res {
                    accepted = Some((theta, r));
                    break;
                }
                theta *= 0.5;
            }
        }
        let Some((theta, r)) = accepted else {
            break;
        };
        u = trial;
        res = r;
        report.iterations += 1;
        report.damping_history.push(theta);
        report.residual_history.push(res);
    }
    report.regularized_residual = res;
    report.achieved_tolerance = res <= tol;
    report.final_residual = disc.weak_residual(&u, 0.0);
    let field = RealField::new(grid, u, disc.layout.known.clone())?;
    Ok((field, report))
}

const ANDERSON_DEPTH: usize = 5;
const MIN_DAMPING: f64 = 1.0 / 64.0;

/// Anderson mixing for the Picard fixed-point map.
struct Anderson {
    depth: usize,
    history: std::collections::VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            history: Default::default(),
        }
    }

    fn reset(&mut self) {
        self.history.clear();
    }

    /// Records the iterate `x` with Picard increment `f` and returns the mixed
    /// next iterate, or `None` before two iterates are known.
    fn step(&mut self, x: &[f64], f: &[f64]) -> Option<Vec<f64>> {
        self.history.push_back((x.to_vec(), f.to_vec()));
        if self.history.len() > self.depth + 1 {
            self.history.pop_front();
        }
        if self.history.len() < 2 {
            return None;
        }
        let pairs: Vec<_> = self.history.iter().collect();
        let mut dx = Vec::new();
        let mut df = Vec::new();
        for w in pairs.windows(2) {
            dx.push(
                w[1].0
                    .iter()
                    .zip(&w[0].0)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<f64>>(),
            );
            df.push(
                w[1].1
                    .iter()
                    .zip(&w[0].1)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<f64>>(),
            );
        }
        let gamma = crate::dense::least_squares(&df, f, 1e-12)?;
        let mut out: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + b).collect();
        for (j, g) in gamma.iter().enumerate() {
            for i in 0..out.len() {
                out[i] -= g * (dx[j][i] + df[j][i]);
            }
        }
        Some(out)
    }
}

fn scatter(layout: &Layout, x: &[f64], u: &mut [f64]) {
    for (i, &k) in layout.interior.iter().enumerate() {
        u[k] = x[i];
    }
}

/// Evaluates the weak residual of `v` for `problem` with regularization `eps`
/// (`0` for the exact equation).
pub fn weak_residual(problem: &PLaplaceProblem, v: &RealField, eps: f64) -> Result<f64> {
    problem.grid.ensure_same(v.grid())?;
    let disc = Discretization::new(problem);
    let u = v.samples().to_vec();
    for k in 0..u.len() {
        if disc.layout.known[k] && v.get(k).is_none() {
            return Err(Error::InvalidParameter(
                "field does not cover the stencil".into(),
            ));
        }
    }
    Ok(disc.weak_residual(&u, eps))
}
