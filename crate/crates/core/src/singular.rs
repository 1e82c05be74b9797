//! Cauchy and Beurling transforms on the periodic embedding.
//!
//! `T g(z) = -1/pi ∫ g(w) / (w - z) dA(w)` and
//! `S g(z) = -1/pi p.v.∫ g(w) / (w - z)^2 dA(w)`.
//!
//! The Fourier path applies the exact multipliers of `∂_zbar^{-1}` and `S` on
//! the torus. A periodic inverse of `∂_zbar` only exists for mean-zero data, so
//! the mass and the two first moments of `g` are carried by Gaussian reference
//! densities whose planar transforms are known in closed form; the periodic
//! remainder has its additive constant anchored against direct quadrature at
//! the grid center.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{tapered_samples, ComplexField, DiskGrid};
use crate::spectral::Fft2;

const INV_PI: f64 = std::f64::consts::FRAC_1_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    #[default]
    FourierMultiplier,
    SampledKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Cauchy,
    Beurling,
}

/// Precomputed transform data for one grid.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    grid: DiskGrid,
    mode: KernelMode,
    fft: Fft2,
    cauchy_hat: Vec<Complex64>,
    beurling_hat: Vec<Complex64>,
    reference_width: f64,
}

impl TransformPlan {
    pub fn new(grid: DiskGrid) -> Self {
        Self::with_mode(grid, KernelMode::FourierMultiplier)
    }

    pub fn with_mode(grid: DiskGrid, mode: KernelMode) -> Self {
        let fft = Fft2::for_grid(&grid);
        let n = grid.n_per_side();
        let mut cauchy_hat = vec![Complex64::default(); grid.len()];
        let mut beurling_hat = vec![Complex64::default(); grid.len()];
        match mode {
            KernelMode::FourierMultiplier => {
                for row in 0..n {
                    let xi2 = grid.frequency(row);
                    for col in 0..n {
                        let xi = Complex64::new(grid.frequency(col), xi2);
                        let k = row * n + col;
                        if xi.norm_sqr() > 0.0 {
                            // inverse of the dzbar symbol (i/2) xi
                            cauchy_hat[k] = Complex64::new(0.0, -2.0) / xi;
                            beurling_hat[k] = xi.conj() / xi;
                        }
                    }
                }
            }
            KernelMode::SampledKernel => {
                let h2 = grid.cell_area();
                let half = (n / 2) as isize;
                for row in 0..n {
                    for col in 0..n {
                        // torus offsets in [-n/2, n/2)
                        let dr = if (row as isize) < half {
                            row as isize
                        } else {
                            row as isize - n as isize
                        };
                        let dc = if (col as isize) < half {
                            col as isize
                        } else {
                            col as isize - n as isize
                        };
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let zeta = Complex64::new(dc as f64, dr as f64) * grid.spacing();
                        // kernels act as g(w) K(w - z), i.e. convolution with K(-zeta)
                        cauchy_hat[row * n + col] = INV_PI * h2 / zeta;
                        beurling_hat[row * n + col] = -INV_PI * h2 / (zeta * zeta);
                    }
                }
                fft.forward(&mut cauchy_hat);
                fft.forward(&mut beurling_hat);
            }
        }
        Self {
            grid,
            mode,
            fft,
            cauchy_hat,
            beurling_hat,
            reference_width: grid.domain_radius() / 4.0,
        }
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// Beurling multiplier at FFT bin `index` (unit modulus off the origin in
    /// Fourier mode).
    pub fn beurling_multiplier(&self, index: usize) -> Complex64 {
        self.beurling_hat[index]
    }

    fn apply(&self, samples: &mut [Complex64], hat: &[Complex64]) {
        self.fft.forward(samples);
        samples.iter_mut().zip(hat).for_each(|(s, m)| *s *= m);
        self.fft.inverse(samples);
    }

    fn check(&self, g: &ComplexField) -> Result<()> {
        self.grid.ensure_same(g.grid())
    }

    /// Splits `g` into a periodic remainder plus Gaussian references.
    fn split(&self, g: &ComplexField) -> (Vec<Complex64>, [Complex64; 3]) {
        let mut rest = tapered_samples(g);
        let refs = Reference::new(self.reference_width);
        let c0 = self.grid.center();
        // moment rows: mass, ∫ zeta, ∫ conj(zeta)
        let mut m = [[Complex64::default(); 3]; 3];
        let mut rhs = [Complex64::default(); 3];
        for (k, &v) in rest.iter().enumerate() {
            let zeta = self.grid.point_at(k) - c0;
            let weights = [Complex64::new(1.0, 0.0), zeta, zeta.conj()];
            let basis = refs.densities(zeta);
            for i in 0..3 {
                rhs[i] += weights[i] * v;
                for j in 0..3 {
                    m[i][j] += weights[i] * basis[j];
                }
            }
        }
        let coeffs = solve_dense(m, rhs);
        for (k, v) in rest.iter_mut().enumerate() {
            let basis = refs.densities(self.grid.point_at(k) - c0);
            *v -= coeffs[0] * basis[0] + coeffs[1] * basis[1] + coeffs[2] * basis[2];
        }
        (rest, coeffs)
    }

    fn output(&self, samples: Vec<Complex64>) -> ComplexField {
        ComplexField::new(self.grid, samples, vec![true; self.grid.len()])
            .expect("transform output is finite")
    }
}

/// `ω = T g`, defined on the whole embedding square.
pub fn cauchy_transform(plan: &TransformPlan, g: &ComplexField) -> Result<ComplexField> {
    plan.check(g)?;
    match plan.mode {
        KernelMode::SampledKernel => {
            let mut s = tapered_samples(g);
            plan.apply(&mut s, &plan.cauchy_hat);
            Ok(plan.output(s))
        }
        KernelMode::FourierMultiplier => {
            let (rest, c) = plan.split(g);
            let mut periodic = rest.clone();
            plan.apply(&mut periodic, &plan.cauchy_hat);
            // anchor the periodic constant at the center sample
            let center_index = plan
                .grid
                .index(plan.grid.n_per_side() / 2, plan.grid.n_per_side() / 2);
            let exact = punctured_center_cauchy(&plan.grid, &rest);
            let shift = exact - periodic[center_index];
            let refs = Reference::new(plan.reference_width);
            let c0 = plan.grid.center();
            for (k, v) in periodic.iter_mut().enumerate() {
                let t = refs.cauchy(plan.grid.point_at(k) - c0);
                *v += shift + c[0] * t[0] + c[1] * t[1] + c[2] * t[2];
            }
            Ok(plan.output(periodic))
        }
    }
}

/// `S g` on the whole embedding square.
pub fn beurling_transform(plan: &TransformPlan, g: &ComplexField) -> Result<ComplexField> {
    plan.check(g)?;
    match plan.mode {
        KernelMode::SampledKernel => {
            let mut s = tapered_samples(g);
            plan.apply(&mut s, &plan.beurling_hat);
            Ok(plan.output(s))
        }
        KernelMode::FourierMultiplier => {
            let (mut rest, c) = plan.split(g);
            plan.apply(&mut rest, &plan.beurling_hat);
            let refs = Reference::new(plan.reference_width);
            let c0 = plan.grid.center();
            for (k, v) in rest.iter_mut().enumerate() {
                let s = refs.beurling(plan.grid.point_at(k) - c0);
                *v += c[0] * s[0] + c[1] * s[1] + c[2] * s[2];
            }
            Ok(plan.output(rest))
        }
    }
}

/// Cauchy transform at the grid center of a mean-zero periodic remainder.
///
/// The lattice is symmetric about the center, so the punctured sum is exact up
/// to the missing center cell, whose average integrand is `∂_z g(center)`.
fn punctured_center_cauchy(grid: &DiskGrid, samples: &[Complex64]) -> Complex64 {
    let n = grid.n_per_side();
    let c = n / 2;
    let h = grid.spacing();
    let mut sum = Complex64::default();
    for row in 1..n {
        for col in 1..n {
            if row == c && col == c {
                continue;
            }
            let zeta = Complex64::new((col as f64 - c as f64) * h, (row as f64 - c as f64) * h);
            sum += samples[row * n + col] / zeta;
        }
    }
    let at = |r: usize, cc: usize| samples[r * n + cc];
    let gx = (at(c, c + 1) - at(c, c - 1)) / (2.0 * h);
    let gy = (at(c + 1, c) - at(c - 1, c)) / (2.0 * h);
    let gz = 0.5 * (gx - Complex64::i() * gy);
    -INV_PI * grid.cell_area() * (sum + gz)
}

/// Gaussian reference densities `g0 = exp(-|z|^2/s^2)`, `∂_zbar g0`, `∂_z g0`
/// and their planar transforms.
struct Reference {
    s2: f64,
}

impl Reference {
    fn new(width: f64) -> Self {
        Self { s2: width * width }
    }

    fn densities(&self, z: Complex64) -> [Complex64; 3] {
        let g0 = (-z.norm_sqr() / self.s2).exp();
        [
            Complex64::new(g0, 0.0),
            -z * g0 / self.s2,
            -z.conj() * g0 / self.s2,
        ]
    }

    /// `[T g0, T ∂_zbar g0 = g0, T ∂_z g0 = S g0]`.
    fn cauchy(&self, z: Complex64) -> [Complex64; 3] {
        let u = z.norm_sqr() / self.s2;
        let g0 = Complex64::new((-u).exp(), 0.0);
        [self.t_g0(z, u), g0, self.s_g0(z, u)]
    }

    /// `[S g0, S ∂_zbar g0 = ∂_z g0, S ∂_z g0 = ∂_z^2 T g0]`.
    fn beurling(&self, z: Complex64) -> [Complex64; 3] {
        let u = z.norm_sqr() / self.s2;
        let dz_g0 = -z.conj() * (-u).exp() / self.s2;
        [self.s_g0(z, u), dz_g0, self.dzz_t_g0(z, u)]
    }

    // T g0 = s^2 (1 - e^{-u}) / z
    fn t_g0(&self, z: Complex64, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::default();
        }
        if u < 0.5 {
            // (1 - e^{-u}) / z = zbar/s^2 * (1 - e^{-u})/u
            return z.conj() * series(u, |k| if k == 0 { 0.0 } else { sign(k + 1) / fact(k) }, 1);
        }
        self.s2 * (1.0 - (-u).exp()) / z
    }

    // S g0 = (s^2 / z^2) (u e^{-u} - 1 + e^{-u})
    fn s_g0(&self, z: Complex64, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::default();
        }
        if u < 0.5 {
            // s^2 u^2 / z^2 = zbar^2 / s^2
            let a = series(
                u,
                |k| {
                    if k < 2 {
                        0.0
                    } else {
                        sign(k) * (1.0 - k as f64) / fact(k)
                    }
                },
                2,
            );
            return z.conj() * z.conj() / self.s2 * a;
        }
        self.s2 / (z * z) * (u * (-u).exp() - 1.0 + (-u).exp())
    }

    // ∂_z^2 T g0 = (s^2 / z^3) (2 (1 - e^{-u}) - 2u e^{-u} - u^2 e^{-u})
    fn dzz_t_g0(&self, z: Complex64, u: f64) -> Complex64 {
        if u == 0.0 {
            return Complex64::default();
        }
        if u < 0.5 {
            // s^2 u^3 / z^3 = zbar^3 / s^4
            let b = series(
                u,
                |k| {
                    if k < 3 {
                        0.0
                    } else {
                        sign(k + 1) * ((k - 1) * (k - 2)) as f64 / fact(k)
                    }
                },
                3,
            );
            let zb = z.conj();
            return zb * zb * zb / (self.s2 * self.s2) * b;
        }
        let e = (-u).exp();
        self.s2 / (z * z * z) * (2.0 * (1.0 - e) - 2.0 * u * e - u * u * e)
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `Σ_{k ≥ lead} c_k u^{k - lead}` truncated at 24 terms.
fn series(u: f64, coeff: impl Fn(usize) -> f64, lead: usize) -> f64 {
    let mut sum = 0.0;
    let mut pow = 1.0;
    for k in lead..lead + 24 {
        sum += coeff(k) * pow;
        pow *= u;
    }
    sum
}

/// Direct quadrature of `T g` or `S g` at arbitrary points.
///
/// The singularity is handled by subtracting a local cubic Taylor model of `g`
/// (fitted by least squares to the surrounding 6x6 samples) multiplied by the
/// flat-topped cutoff `exp(-|ζ|^4/ρ^4)`, `ρ = 8h`; the subtracted part is
/// integrated in closed form and the remainder, which is continuous at the
/// singular point, by the midpoint rule over all samples.
pub fn quadrature_oracle(
    g: &ComplexField,
    kind: TransformKind,
    eval_points: &[Complex64],
) -> Result<Vec<Complex64>> {
    let grid = g.grid();
    let h = grid.spacing();
    let rho2 = (8.0 * h) * (8.0 * h);
    let samples = g.samples();
    let mut out = Vec::with_capacity(eval_points.len());
    for &z in eval_points {
        if !grid.in_domain(z) {
            return Err(Error::InvalidParameter(format!(
                "evaluation point {z} outside the domain"
            )));
        }
        let model = LocalCubic::fit(grid, samples, z)?;
        let mut sum = Complex64::default();
        for (k, &v) in samples.iter().enumerate() {
            let zeta = grid.point_at(k) - z;
            let r2 = zeta.norm_sqr();
            if r2 == 0.0 {
                // the remainder is o(1) at the singular point
                continue;
            }
            let cut = (-(r2 * r2) / (rho2 * rho2)).exp();
            let p = if cut > 1e-18 {
                model.eval(zeta) * cut
            } else {
                Complex64::default()
            };
            let resid = v - p;
            sum += match kind {
                TransformKind::Cauchy => resid / zeta,
                TransformKind::Beurling => resid / (zeta * zeta),
            };
        }
        let mut val = -INV_PI * grid.cell_area() * sum;
        // ∫ cut ζ^a ζ̄^b / ζ^m dA vanishes unless a - b = m; then it is
        // pi rho^2 Γ(3/2) for b = 0 and pi rho^4 / 2 for b = 1
        let half_sqrt_pi = 0.5 * std::f64::consts::PI.sqrt();
        val -= match kind {
            TransformKind::Cauchy => {
                model.coeff(1, 0) * rho2 * half_sqrt_pi + model.coeff(2, 1) * rho2 * rho2 * 0.5
            }
            TransformKind::Beurling => model.coeff(2, 0) * rho2 * half_sqrt_pi,
        };
        out.push(val);
    }
    Ok(out)
}

const CUBIC_BASIS: [(u32, u32); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

/// `g(z + ζ) ≈ Σ c_ab ζ^a ζ̄^b` over total degree at most three.
struct LocalCubic {
    coeffs: [Complex64; 10],
}

impl LocalCubic {
    fn fit(grid: &DiskGrid, samples: &[Complex64], z: Complex64) -> Result<Self> {
        let (fr, fc) = grid.fractional_index(z);
        let n = grid.n_per_side() as isize;
        let (r0, c0) = (fr.floor() as isize - 2, fc.floor() as isize - 2);
        if r0 < 0 || c0 < 0 || r0 + 5 >= n || c0 + 5 >= n {
            return Err(Error::InvalidParameter(format!(
                "evaluation point {z} too close to the grid edge"
            )));
        }
        let h = grid.spacing();
        let mut ata = [[Complex64::default(); 10]; 10];
        let mut atb = [Complex64::default(); 10];
        for r in r0..r0 + 6 {
            for c in c0..c0 + 6 {
                let d = (grid.point(r as usize, c as usize) - z) / h;
                let row = CUBIC_BASIS.map(|(a, b)| d.powu(a) * d.conj().powu(b));
                let v = samples[(r * n + c) as usize];
                for i in 0..10 {
                    atb[i] += row[i].conj() * v;
                    for j in 0..10 {
                        ata[i][j] += row[i].conj() * row[j];
                    }
                }
            }
        }
        let x = solve_dense(ata, atb);
        let mut coeffs = [Complex64::default(); 10];
        for (i, &(a, b)) in CUBIC_BASIS.iter().enumerate() {
            coeffs[i] = x[i] / h.powi((a + b) as i32);
        }
        Ok(Self { coeffs })
    }

    fn coeff(&self, a: u32, b: u32) -> Complex64 {
        let i = CUBIC_BASIS
            .iter()
            .position(|&t| t == (a, b))
            .expect("monomial in basis");
        self.coeffs[i]
    }

    fn eval(&self, zeta: Complex64) -> Complex64 {
        CUBIC_BASIS
            .iter()
            .zip(&self.coeffs)
            .map(|(&(a, b), &c)| c * zeta.powu(a) * zeta.conj().powu(b))
            .sum()
    }
}

fn solve_dense<const N: usize>(
    mut a: [[Complex64; N]; N],
    mut b: [Complex64; N],
) -> [Complex64; N] {
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .expect("non-empty");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        for row in (col + 1)..N {
            let f = a[row][col] / d;
            for k in col..N {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = [Complex64::default(); N];
    for row in (0..N).rev() {
        let mut s = b[row];
        for k in (row + 1)..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// `L^2` norm of `S g` over the whole plane: the sampled square plus the
/// exterior contribution of the far field `-(m z^{-2} + 2 d z^{-3}) / pi`,
/// where `m` and `d` are the mass and first moment of `g` about the grid center.
pub fn beurling_plane_l2(g: &ComplexField, sg: &ComplexField) -> Result<f64> {
    g.grid().ensure_same(sg.grid())?;
    let grid = g.grid();
    let c = grid.center();
    let (mut m, mut d) = (Complex64::default(), Complex64::default());
    for (k, &v) in g.samples().iter().enumerate() {
        m += v;
        d += v * (grid.point_at(k) - c);
    }
    m *= grid.cell_area();
    d *= grid.cell_area();
    let a = grid.embed_side() / 2.0;
    let pi = std::f64::consts::PI;
    // ∫ |z|^-4 and ∫ |z|^-6 outside the square [-a, a]^2; the cross term
    // cancels under the square's quarter-turn symmetry
    let i4 = (pi + 2.0) / (2.0 * a * a);
    let i6 = (3.0 * pi / 16.0 + 0.5) / a.powi(4);
    let tail = (m.norm_sqr() * i4 + 4.0 * d.norm_sqr() * i6) / (pi * pi);
    let inside: f64 = sg.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_area();
    Ok((inside + tail).sqrt())
}

/// Cell-coverage approximation of the indicator of `B_r(center)`, so that the
/// sampled mass matches `pi r^2` to high accuracy.
pub fn disc_indicator(grid: &DiskGrid, center: Complex64, radius: f64) -> ComplexField {
    const SUB: usize = 16;
    let h = grid.spacing();
    ComplexField::from_fn_everywhere(*grid, |z| {
        let d = (z - center).norm();
        if d < radius - h {
            return Complex64::new(1.0, 0.0);
        }
        if d > radius + h {
            return Complex64::default();
        }
        let mut inside = 0;
        for a in 0..SUB {
            for b in 0..SUB {
                let off = Complex64::new(
                    ((a as f64 + 0.5) / SUB as f64 - 0.5) * h,
                    ((b as f64 + 0.5) / SUB as f64 - 0.5) * h,
                );
                if (z + off - center).norm() < radius {
                    inside += 1;
                }
            }
        }
        Complex64::new(inside as f64 / (SUB * SUB) as f64, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{wirtinger_derivatives, DerivativeMethod};

    fn small() -> DiskGrid {
        DiskGrid::new(128, 2.0, 8.0).unwrap()
    }

    fn gaussian(grid: DiskGrid, a: f64, c: Complex64) -> ComplexField {
        ComplexField::from_fn_everywhere(grid, move |z| {
            Complex64::new((-a * (z - c).norm_sqr()).exp(), 0.0)
        })
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = ComplexField::zeros(small());
        let plan = TransformPlan::new(small());
        assert_eq!(cauchy_transform(&plan, &g).unwrap().sup_modulus(), 0.0);
        assert_eq!(beurling_transform(&plan, &g).unwrap().sup_modulus(), 0.0);
        let q =
            quadrature_oracle(&g, TransformKind::Beurling, &[Complex64::new(0.3, 0.1)]).unwrap();
        assert_eq!(q[0], Complex64::default());
    }

    #[test]
    fn beurling_multiplier_is_unimodular() {
        let plan = TransformPlan::new(small());
        for k in 1..small().len() {
            assert!((plan.beurling_multiplier(k).norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(plan.beurling_multiplier(0), Complex64::default());
    }

    #[test]
    fn reference_series_match_closed_forms() {
        let r = Reference::new(0.7);
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-0.1, 0.45)] {
            let u = z.norm_sqr() / r.s2;
            assert!(u < 0.5);
            let e = (-u).exp();
            let t = r.s2 * (1.0 - e) / z;
            let s = r.s2 / (z * z) * (u * e - 1.0 + e);
            let d = r.s2 / (z * z * z) * (2.0 * (1.0 - e) - 2.0 * u * e - u * u * e);
            assert!((r.t_g0(z, u) - t).norm() < 1e-12);
            assert!((r.s_g0(z, u) - s).norm() < 1e-10);
            assert!((r.dzz_t_g0(z, u) - d).norm() < 1e-8);
        }
    }

    #[test]
    fn transform_inverts_dzbar_for_offcenter_bump() {
        // the taper spans only 16 cells here, which bounds spectral accuracy
        let grid = DiskGrid::new(256, 4.0, 16.0).unwrap();
        let g = gaussian(grid, 6.0, Complex64::new(0.3, -0.2));
        let plan = TransformPlan::new(grid);
        let w = cauchy_transform(&plan, &g).unwrap();
        let (dz, dzb) = wirtinger_derivatives(&w, DerivativeMethod::Spectral);
        let sg = beurling_transform(&plan, &g).unwrap();
        let (mut e1, mut e2, mut den) = (0.0, 0.0, 0.0);
        for k in 0..grid.len() {
            if grid.in_domain(grid.point_at(k)) {
                e1 += (dzb.samples()[k] - g.samples()[k]).norm_sqr();
                e2 += (dz.samples()[k] - sg.samples()[k]).norm_sqr();
                den += g.samples()[k].norm_sqr();
            }
        }
        assert!((e1 / den).sqrt() < 5e-4, "{}", (e1 / den).sqrt());
        assert!((e2 / den).sqrt() < 5e-4, "{}", (e2 / den).sqrt());
    }

    #[test]
    fn isometry_with_far_field() {
        let grid = DiskGrid::new(256, 4.0, 16.0).unwrap();
        let g = gaussian(grid, 2.0, Complex64::new(0.5, 0.25));
        let plan = TransformPlan::new(grid);
        let sg = beurling_transform(&plan, &g).unwrap();
        let ratio = beurling_plane_l2(&g, &sg).unwrap() / g.l2_norm();
        assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
    }

    #[test]
    fn linearity() {
        let grid = small();
        let plan = TransformPlan::new(grid);
        let a = gaussian(grid, 3.0, Complex64::new(0.2, 0.1));
        let b = gaussian(grid, 5.0, Complex64::new(-0.4, 0.3));
        let (ca, cb) = (Complex64::new(2.0, -1.0), Complex64::new(0.5, 0.25));
        let combo = a.zip_map(&b, |x, y| ca * x + cb * y).unwrap();
        let ta = cauchy_transform(&plan, &a).unwrap();
        let tb = cauchy_transform(&plan, &b).unwrap();
        let tc = cauchy_transform(&plan, &combo).unwrap();
        for k in 0..grid.len() {
            let lhs = tc.samples()[k];
            let rhs = ca * ta.samples()[k] + cb * tb.samples()[k];
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn indicator_transform_closed_form() {
        let grid = DiskGrid::new(256, 4.0, 16.0).unwrap();
        let chi = disc_indicator(&grid, Complex64::default(), 1.0);
        let mass: f64 = chi.samples().iter().map(|v| v.re).sum::<f64>() * grid.cell_area();
        assert!((mass - std::f64::consts::PI).abs() < 1e-3, "{mass}");
        let plan = TransformPlan::new(grid);
        let w = cauchy_transform(&plan, &chi).unwrap();
        let h = grid.spacing();
        let mut worst = 0.0f64;
        for k in 0..grid.len() {
            let z = grid.point_at(k);
            let r = z.norm();
            if (r - 1.0).abs() < 4.0 * h || r >= 4.0 || r < 1e-12 {
                continue;
            }
            let exact = if r < 1.0 { z.conj() } else { 1.0 / z };
            worst = worst.max((w.samples()[k] - exact).norm() / exact.norm().max(0.05));
        }
        assert!(worst < 1e-2, "{worst}");
        let q =
            quadrature_oracle(&chi, TransformKind::Cauchy, &[Complex64::new(0.5, 0.0)]).unwrap();
        assert!((q[0] - 0.5).norm() < 1e-2);
        let q =
            quadrature_oracle(&chi, TransformKind::Beurling, &[Complex64::new(2.0, 0.0)]).unwrap();
        assert!((q[0] + 0.25).norm() < 1e-2);
    }

    #[test]
    fn sampled_kernel_mode_is_consistent() {
        let grid = small();
        let g = gaussian(grid, 4.0, Complex64::default());
        let fast = cauchy_transform(&TransformPlan::new(grid), &g).unwrap();
        let direct = cauchy_transform(
            &TransformPlan::with_mode(grid, KernelMode::SampledKernel),
            &g,
        )
        .unwrap();
        let z = grid.nearest(Complex64::new(0.5, 0.25)).unwrap();
        let a = fast.get_rc(z.0, z.1).unwrap();
        let b = direct.get_rc(z.0, z.1).unwrap();
        assert!((a - b).norm() < 2e-2 * a.norm(), "{a} {b}");
    }

    #[test]
    fn oracle_matches_gaussian_closed_form() {
        // T exp(-|z|^2/s^2) is known in closed form
        let grid = DiskGrid::new(256, 2.0, 8.0).unwrap();
        let s = 0.4;
        let g = gaussian(grid, 1.0 / (s * s), Complex64::default());
        let r = Reference::new(s);
        let pts = [
            Complex64::new(0.31, -0.17),
            Complex64::new(1.2, 0.4),
            Complex64::new(0.0, 0.0),
        ];
        let t = quadrature_oracle(&g, TransformKind::Cauchy, &pts).unwrap();
        let sb = quadrature_oracle(&g, TransformKind::Beurling, &pts).unwrap();
        for (k, &z) in pts.iter().enumerate() {
            let c = r.cauchy(z);
            assert!(
                (t[k] - c[0]).norm() < 1e-3 * c[0].norm().max(1e-2),
                "{z} {} {}",
                t[k],
                c[0]
            );
            assert!(
                (sb[k] - c[2]).norm() < 1e-3 * c[2].norm().max(1e-2),
                "{z} {} {}",
                sb[k],
                c[2]
            );
        }
    }
}
