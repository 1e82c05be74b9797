use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::line_fit;
use crate::error::{Error, Result};
use crate::field::{smooth_step, wirtinger_derivatives, ComplexField, DerivativeMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiregularityReport {
    pub samples: usize,
    /// Samples with `|f_z|` below this are skipped.
    pub threshold: f64,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub k_expected: f64,
    pub tolerance: f64,
    /// `p99 <= k_expected + tolerance`.
    pub passes: bool,
    /// `max <= k_expected + tolerance`.
    pub sup_passes: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution of `|f_zbar| / |f_z|` over the samples of `f` inside the
/// domain where `|f_z| >= threshold_rel * sup|f_z|`.
pub fn quasiregularity_check(
    f: &ComplexField,
    k_expected: f64,
    tolerance: f64,
    threshold_rel: f64,
) -> Result<QuasiregularityReport> {
    let grid = f.grid();
    let (fz, fzb) = wirtinger_derivatives(f, DerivativeMethod::CenteredDifference);
    let inside: Vec<usize> = (0..grid.len())
        .filter(|&k| grid.in_domain(grid.point_at(k)) && fz.mask()[k])
        .collect();
    let sup = inside
        .iter()
        .map(|&k| fz.samples()[k].norm())
        .fold(0.0_f64, f64::max);
    let threshold = threshold_rel * sup;
    let mut ratios: Vec<f64> = inside
        .iter()
        .filter(|&&k| fz.samples()[k].norm() >= threshold && fz.samples()[k].norm() > 0.0)
        .map(|&k| fzb.samples()[k].norm() / fz.samples()[k].norm())
        .collect();
    if ratios.is_empty() {
        return Err(Error::InvalidParameter(
            "no unmasked samples with nonvanishing f_z".into(),
        ));
    }
    ratios.sort_by(f64::total_cmp);
    let max = *ratios.last().expect("non-empty");
    let p99 = quantile(&ratios, 0.99);
    Ok(QuasiregularityReport {
        samples: ratios.len(),
        threshold,
        median: quantile(&ratios, 0.5),
        p90: quantile(&ratios, 0.9),
        p99,
        max,
        k_expected,
        tolerance,
        passes: p99 <= k_expected + tolerance,
        sup_passes: max <= k_expected + tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W12Report {
    pub offsets: Vec<(i64, i64)>,
    pub step_lengths: Vec<f64>,
    /// `||η (F(· + h) - F)||_{L^2} / |h|` per offset.
    pub quotients: Vec<f64>,
    /// Least-squares slope of `log quotient` against `log |h|`.
    pub slope: f64,
    pub bound: f64,
    pub passes: bool,
}

/// Minimum admissible slope of the log-quotients.
pub const W12_SLOPE_FLOOR: f64 = -0.1;

/// Windowed difference quotients of `F` for offsets given in grid steps
/// `(columns, rows)`. The window is 1 on `B_{R/4}` and vanishes outside
/// `B_{R/2}`.
pub fn w12_difference_quotient_check(
    f: &ComplexField,
    offsets: &[(i64, i64)],
) -> Result<W12Report> {
    let grid = f.grid();
    let n = grid.n_per_side() as i64;
    let h = grid.spacing();
    let r = grid.domain_radius();
    if offsets.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least two offsets are needed for a trend".into(),
        ));
    }
    let mut lengths = Vec::new();
    let mut quotients = Vec::new();
    for &(dc, dr) in offsets {
        let len = h * ((dc * dc + dr * dr) as f64).sqrt();
        if len == 0.0 || len > r / 8.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "offset {dc},{dr} outside (0, R/8]"
            )));
        }
        let mut sum = 0.0;
        for k in 0..grid.len() {
            let z = grid.point_at(k);
            let d = (z - grid.center()).norm();
            let eta = 1.0 - smooth_step((d - r / 4.0) / (r / 4.0));
            if eta == 0.0 {
                continue;
            }
            let (row, col) = grid.row_col(k);
            let (r2, c2) = (row as i64 + dr, col as i64 + dc);
            if r2 < 0 || c2 < 0 || r2 >= n || c2 >= n {
                return Err(Error::WindowTooSmall(
                    "shifted window leaves the grid".into(),
                ));
            }
            let (Some(a), Some(b)) = (f.get(k), f.get_rc(r2 as usize, c2 as usize)) else {
                return Err(Error::WindowTooSmall(
                    "shifted window leaves the support".into(),
                ));
            };
            sum += eta * eta * (b - a).norm_sqr();
        }
        lengths.push(len);
        quotients.push((sum * grid.cell_area()).sqrt() / len);
    }
    let xs: Vec<f64> = lengths.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = quotients
        .iter()
        .map(|q| q.max(f64::MIN_POSITIVE).ln())
        .collect();
    let slope = line_fit(&xs, &ys).map_or(0.0, |f| f.slope);
    Ok(W12Report {
        offsets: offsets.to_vec(),
        step_lengths: lengths,
        bound: quotients.iter().copied().fold(0.0, f64::max),
        quotients,
        slope,
        passes: slope >= W12_SLOPE_FLOOR,
    })
}

/// `|Re(z - z0)|^alpha`: Hölder continuous but, for `alpha < 1/2`, not in
/// `W^{1,2}` near the line `Re z = Re z0`.
pub fn line_cusp(z: Complex64, z0: Complex64, alpha: f64) -> Complex64 {
    Complex64::new((z - z0).re.abs().powf(alpha), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DiskGrid;

    #[test]
    fn holomorphic_map_has_zero_ratio() {
        let g = DiskGrid::new(64, 2.0, 8.0).unwrap();
        let f = ComplexField::from_fn(g, |z| z * z);
        let r = quasiregularity_check(&f, 0.0, 1e-9, 1e-3).unwrap();
        assert!(r.passes && r.sup_passes);
    }

    #[test]
    fn identity_quotients_are_flat() {
        let g = DiskGrid::new(128, 4.0, 16.0).unwrap();
        let f = ComplexField::from_fn(g, |z| z);
        let r = w12_difference_quotient_check(&f, &[(1, 0), (2, 0), (4, 0), (0, 4)]).unwrap();
        assert!(r.slope.abs() < 1e-12 && r.passes);
        for q in &r.quotients {
            assert!((q - r.quotients[0]).abs() < 1e-12);
        }
    }
}
