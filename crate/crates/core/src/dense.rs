//! Small dense linear solves.

/// Solves `a x = b` by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot is below `1e-14` times the largest entry.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Least-squares solution of `min |A x - b|` for a tall matrix given by its
/// columns, via regularized normal equations.
pub fn least_squares(columns: &[Vec<f64>], b: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let m = columns.len();
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = columns[i].iter().zip(&columns[j]).map(|(a, c)| a * c).sum();
            gram[i][j] = v;
            gram[j][i] = v;
        }
        rhs[i] = columns[i].iter().zip(b).map(|(a, c)| a * c).sum();
    }
    let trace: f64 = (0..m).map(|i| gram[i][i]).sum();
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += ridge * trace;
    }
    solve(gram, rhs)
}

/// Ordinary least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

/// Fits a line through at least two points with distinct abscissae.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let m = xs.len();
    if m < 2 || ys.len() != m {
        return None;
    }
    let mf = m as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / mf, ys.iter().sum::<f64>() / mf);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Some(LineFit {
        slope,
        intercept,
        rms: (ss / mf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ];
        let x = solve(a, vec![5.0, 3.0, 4.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn least_squares_line_fit() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ones = vec![1.0; 10];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let c = least_squares(&[ones, xs], &ys, 0.0).unwrap();
        assert!((c[0] + 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exact_line() {
        let f = line_fit(&[0.0, 1.0, 3.0], &[1.0, 3.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14 && f.rms < 1e-14);
        assert!(line_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
