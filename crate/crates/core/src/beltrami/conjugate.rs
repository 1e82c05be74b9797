use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::{gradient, RealField};
use crate::solver::linear::{pcg, FivePoint, EAST, NORTH, SOUTH, WEST};

/// Default bound on the relative curl residual of the flux.
pub const DEFAULT_CURL_TOLERANCE: f64 = 0.05;

/// Layers of the support excluded from the curl diagnostic.
pub const CURL_MARGIN: usize = 6;

fn erode(mask: &[bool], n: usize) -> Vec<bool> {
    (0..mask.len())
        .map(|k| {
            let (r, c) = (k / n, k % n);
            mask[k]
                && r > 0
                && c > 0
                && r + 1 < n
                && c + 1 < n
                && mask[k - 1]
                && mask[k + 1]
                && mask[k - n]
                && mask[k + n]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ConjugateFunction {
    pub w: RealField,
    /// `||∇w - φ|| / ||φ||` over the edges used.
    pub gradient_residual: f64,
    /// `||∂_y φ1 - ∂_x φ2|| / (||∂_y φ1|| + ||∂_x φ2||)`.
    pub curl_residual: f64,
    /// Grid index where `w = 0`.
    pub pinned: usize,
    /// Whether edges crossing the ray left of the center were dropped.
    pub branch_cut: bool,
}

/// Stream function `w` with `(w_x, w_y) = (-A|∇v|^{p-2} v_y, A|∇v|^{p-2} v_x)`,
/// recovered by least squares over grid edges and normalized to vanish at the
/// sample nearest the center. When the center is not in the support (annuli)
/// the edges crossing the ray `{Im z = Im c, Re z < Re c}` are removed, giving
/// the single-valued branch.
pub fn conjugate_function(
    v: &RealField,
    a: &RealField,
    p: f64,
    curl_tolerance: f64,
) -> Result<ConjugateFunction> {
    let grid = *v.grid();
    grid.ensure_same(a.grid())?;
    let n = grid.n_per_side();
    let h = grid.spacing();
    let (vx, vy) = gradient(v);
    let mut phi1 = vec![0.0; grid.len()];
    let mut phi2 = vec![0.0; grid.len()];
    let mut mask = vec![false; grid.len()];
    for k in 0..grid.len() {
        if let (Some(x), Some(y), Some(w)) = (vx.get(k), vy.get(k), a.get(k)) {
            let m = x.hypot(y);
            let s = if m > 0.0 { w * m.powf(p - 2.0) } else { 0.0 };
            phi1[k] = -s * y;
            phi2[k] = s * x;
            mask[k] = true;
        }
    }

    // curl of the flux by centered differences, away from the boundary layer
    // left by the staircase Dirichlet treatment
    let mut core = mask.clone();
    for _ in 0..CURL_MARGIN {
        core = erode(&core, n);
    }
    let (mut num, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for k in 0..grid.len() {
        if core[k] {
            let a1 = (phi1[k + n] - phi1[k - n]) / (2.0 * h);
            let a2 = (phi2[k + 1] - phi2[k - 1]) / (2.0 * h);
            num += (a1 - a2).powi(2);
            d1 += a1 * a1;
            d2 += a2 * a2;
        }
    }
    let curl_residual = num.sqrt() / (d1.sqrt() + d2.sqrt()).max(f64::MIN_POSITIVE);
    if curl_residual > curl_tolerance {
        return Err(Error::CurlResidual {
            residual: curl_residual,
            tolerance: curl_tolerance,
        });
    }

    let center = grid.index(n / 2, n / 2);
    let branch_cut = !mask[center];
    let (crow, ccol) = (n / 2, n / 2);
    // vertical edge from row r to r+1 is cut when it straddles the ray
    let cut = |r: usize, c: usize| branch_cut && r == crow && c < ccol;
    let edge_ok = |k: usize, dir: usize| -> Option<usize> {
        let (r, c) = grid.row_col(k);
        let j = match dir {
            EAST if c + 1 < n => k + 1,
            WEST if c > 0 => k - 1,
            NORTH if r + 1 < n => k + n,
            SOUTH if r > 0 => k - n,
            _ => return None,
        };
        if !mask[j] {
            return None;
        }
        let crosses = match dir {
            NORTH => cut(r, c),
            SOUTH => cut(r - 1, c),
            _ => false,
        };
        (!crosses).then_some(j)
    };

    let pinned = (0..grid.len())
        .filter(|&k| mask[k])
        .min_by(|&i, &j| {
            let di = (grid.point_at(i) - grid.center()).norm();
            let dj = (grid.point_at(j) - grid.center()).norm();
            di.total_cmp(&dj).then(i.cmp(&j))
        })
        .ok_or_else(|| Error::InvalidParameter("empty support".into()))?;

    // connected component of the pinned node
    let mut reach = vec![false; grid.len()];
    reach[pinned] = true;
    let mut queue = VecDeque::from([pinned]);
    while let Some(k) = queue.pop_front() {
        for dir in [EAST, WEST, NORTH, SOUTH] {
            if let Some(j) = edge_ok(k, dir) {
                if !reach[j] {
                    reach[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }

    let target = |k: usize, j: usize, dir: usize| -> f64 {
        // w_j - w_k along the edge
        match dir {
            EAST => h * 0.5 * (phi1[k] + phi1[j]),
            WEST => -h * 0.5 * (phi1[k] + phi1[j]),
            NORTH => h * 0.5 * (phi2[k] + phi2[j]),
            _ => -h * 0.5 * (phi2[k] + phi2[j]),
        }
    };

    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&k| reach[k] && k != pinned)
        .collect();
    let mut local = vec![usize::MAX; grid.len()];
    for (i, &k) in nodes.iter().enumerate() {
        local[k] = i;
    }
    let m = nodes.len();
    let mut diag = vec![0.0; m];
    let mut off = vec![[0.0; 4]; m];
    let mut nbr = vec![[None; 4]; m];
    let mut rhs = vec![0.0; m];
    for (i, &k) in nodes.iter().enumerate() {
        for dir in [EAST, WEST, NORTH, SOUTH] {
            if let Some(j) = edge_ok(k, dir) {
                diag[i] += 1.0;
                // minimize sum (w_j - w_k - t)^2: row k gets w_k - w_j = -t
                rhs[i] -= target(k, j, dir);
                if j != pinned {
                    nbr[i][dir] = Some(local[j]);
                    off[i][dir] = -1.0;
                }
            }
        }
    }
    let system = FivePoint { diag, off, nbr };
    let mut x = vec![0.0; m];
    let out = pcg(&system, &rhs, &mut x, 1e-13, 20 * (n + 50) + m);
    if !out.converged && out.relative_residual > 1e-8 {
        return Err(Error::Inconsistent(format!(
            "potential recovery did not converge (relative residual {:e})",
            out.relative_residual
        )));
    }
    let mut w = vec![0.0; grid.len()];
    for (i, &k) in nodes.iter().enumerate() {
        w[k] = x[i];
    }
    let (mut res, mut tot) = (0.0, 0.0);
    for &k in nodes.iter().chain(std::iter::once(&pinned)) {
        for dir in [EAST, NORTH] {
            if let Some(j) = edge_ok(k, dir) {
                let t = target(k, j, dir);
                res += (w[j] - w[k] - t).powi(2);
                tot += t * t;
            }
        }
    }
    let w = RealField::new(grid, w, reach)?;
    Ok(ConjugateFunction {
        w,
        gradient_residual: (res / tot.max(f64::MIN_POSITIVE)).sqrt(),
        curl_residual,
        pinned,
        branch_cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DiskGrid;

    #[test]
    fn cauchy_riemann_pairs() {
        let g = DiskGrid::new(64, 2.0, 8.0).unwrap();
        let one = RealField::from_fn(g, |_| 1.0);
        let v = RealField::from_fn(g, |z| z.re);
        let c = conjugate_function(&v, &one, 2.0, 1e-8).unwrap();
        let v2 = RealField::from_fn(g, |z| (z * z).re);
        let c2 = conjugate_function(&v2, &one, 2.0, 1e-8).unwrap();
        assert!(!c.branch_cut);
        for k in 0..g.len() {
            if let Some(w) = c.w.get(k) {
                let z = g.point_at(k);
                assert!((w - z.im).abs() < 1e-9);
            }
            if let Some(w) = c2.w.get(k) {
                let z = g.point_at(k);
                assert!((w - 2.0 * z.re * z.im).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_solutions() {
        let g = DiskGrid::new(64, 2.0, 8.0).unwrap();
        let one = RealField::from_fn(g, |_| 1.0);
        let v = RealField::from_fn(g, |z| z.norm_sqr());
        assert!(matches!(
            conjugate_function(&v, &one, 2.0, 0.05),
            Err(Error::CurlResidual { .. })
        ));
    }
}
