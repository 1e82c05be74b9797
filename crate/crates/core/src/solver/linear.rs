//! Sparse five-point systems with ILU(0)-preconditioned Krylov solvers.

/// Neighbor slots in stencil order.
pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const NORTH: usize = 2;
pub const SOUTH: usize = 3;

/// A five-point matrix over unknowns numbered in row-major grid order, so that
/// west and south neighbors always precede a row.
#[derive(Debug, Clone)]
pub struct FivePoint {
    pub diag: Vec<f64>,
    pub off: Vec<[f64; 4]>,
    pub nbr: Vec<[Option<usize>; 4]>,
}

impl FivePoint {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for d in 0..4 {
                if let Some(j) = self.nbr[i][d] {
                    s += self.off[i][d] * x[j];
                }
            }
            y[i] = s;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let mirror = [WEST, EAST, SOUTH, NORTH];
        (0..self.len()).all(|i| {
            (0..4).all(|d| match self.nbr[i][d] {
                Some(j) => {
                    (self.off[i][d] - self.off[j][mirror[d]]).abs() <= 1e-14 * self.diag[i].abs()
                }
                None => true,
            })
        })
    }
}

/// ILU(0) factors of a five-point matrix: `M = (D + L) D^{-1} (D + U)`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    d: Vec<f64>,
}

impl Ilu0 {
    pub fn new(a: &FivePoint) -> Self {
        let mut d = a.diag.clone();
        for i in 0..a.len() {
            let mut v = a.diag[i];
            if let Some(w) = a.nbr[i][WEST] {
                v -= a.off[i][WEST] * a.off[w][EAST] / d[w];
            }
            if let Some(s) = a.nbr[i][SOUTH] {
                v -= a.off[i][SOUTH] * a.off[s][NORTH] / d[s];
            }
            d[i] = if v.abs() > 1e-300 { v } else { a.diag[i] };
        }
        Self { d }
    }

    pub fn solve(&self, a: &FivePoint, r: &[f64], x: &mut [f64]) {
        let n = a.len();
        for i in 0..n {
            let mut v = r[i];
            if let Some(w) = a.nbr[i][WEST] {
                v -= a.off[i][WEST] * x[w];
            }
            if let Some(s) = a.nbr[i][SOUTH] {
                v -= a.off[i][SOUTH] * x[s];
            }
            x[i] = v / self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = 0.0;
            if let Some(e) = a.nbr[i][EAST] {
                v += a.off[i][EAST] * x[e];
            }
            if let Some(nn) = a.nbr[i][NORTH] {
                v += a.off[i][NORTH] * x[nn];
            }
            x[i] -= v / self.d[i];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients (symmetric matrices).
pub fn pcg(a: &FivePoint, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> KrylovOutcome {
    let n = a.len();
    let m = Ilu0::new(a);
    let bn = norm(b).max(1e-300);
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z = vec![0.0; n];
    m.solve(a, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 0..max_iter {
        let rel = norm(&r) / bn;
        if rel <= rtol {
            return KrylovOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        a.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        m.solve(a, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bn;
    KrylovOutcome {
        iterations: max_iter,
        relative_residual: rel,
        converged: rel <= rtol,
    }
}

/// Preconditioned BiCGSTAB (general matrices).
pub fn bicgstab(
    a: &FivePoint,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = a.len();
    let m = Ilu0::new(a);
    let bn = norm(b).max(1e-300);
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..max_iter {
        let rel = norm(&r) / bn;
        if rel <= rtol {
            return KrylovOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.solve(a, &p, &mut phat);
        a.apply(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bn <= rtol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return KrylovOutcome {
                iterations: it + 1,
                relative_residual: norm(&s) / bn,
                converged: true,
            };
        }
        m.solve(a, &s, &mut shat);
        a.apply(&shat, &mut t);
        omega = dot(&t, &s) / dot(&t, &t).max(1e-300);
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    let rel = r
        .iter()
        .zip(b)
        .map(|(ri, bi)| (bi - ri) * (bi - ri))
        .sum::<f64>()
        .sqrt()
        / bn;
    KrylovOutcome {
        iterations: max_iter,
        relative_residual: rel,
        converged: rel <= rtol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dirichlet Laplacian on an `m x m` block, optionally with convection.
    fn laplacian(m: usize, conv: f64) -> FivePoint {
        let n = m * m;
        let mut diag = vec![4.0; n];
        let mut off = vec![[0.0; 4]; n];
        let mut nbr = vec![[None; 4]; n];
        for r in 0..m {
            for c in 0..m {
                let i = r * m + c;
                diag[i] = 4.0;
                if c + 1 < m {
                    nbr[i][EAST] = Some(i + 1);
                }
                if c > 0 {
                    nbr[i][WEST] = Some(i - 1);
                }
                if r + 1 < m {
                    nbr[i][NORTH] = Some(i + m);
                }
                if r > 0 {
                    nbr[i][SOUTH] = Some(i - m);
                }
                off[i] = [-1.0 - conv, -1.0 + conv, -1.0, -1.0];
            }
        }
        FivePoint { diag, off, nbr }
    }

    #[test]
    fn pcg_solves_laplacian() {
        let a = laplacian(20, 0.0);
        assert!(a.is_symmetric());
        let truth: Vec<f64> = (0..a.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; a.len()];
        a.apply(&truth, &mut b);
        let mut x = vec![0.0; a.len()];
        let out = pcg(&a, &b, &mut x, 1e-12, 500);
        assert!(out.converged);
        assert!(x.iter().zip(&truth).all(|(u, v)| (u - v).abs() < 1e-9));
    }

    #[test]
    fn bicgstab_solves_convection() {
        let a = laplacian(20, 0.3);
        assert!(!a.is_symmetric());
        let truth: Vec<f64> = (0..a.len()).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut b = vec![0.0; a.len()];
        a.apply(&truth, &mut b);
        let mut x = vec![0.0; a.len()];
        let out = bicgstab(&a, &b, &mut x, 1e-12, 500);
        assert!(out.converged);
        assert!(x.iter().zip(&truth).all(|(u, v)| (u - v).abs() < 1e-9));
    }
}
