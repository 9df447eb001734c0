//! Small dense helpers for square, non-symmetric systems (row-major `Vec<Vec<f64>>`).

use crate::error::{Error, Result};

pub(crate) type Matrix = Vec<Vec<f64>>;

pub(crate) fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub(crate) fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * bk[j];
            }
        }
    }
    out
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub(crate) fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(ar, br)| ar.iter().chain(br).copied().collect())
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .expect("non-empty range");
        if aug[pivot][col].abs() <= 1e-14 * scale.max(1.0) {
            return Err(Error::Singular);
        }
        aug.swap(col, pivot);
        for row in (col + 1)..n {
            let f = aug[row][col] / aug[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = aug.split_at_mut(row);
            for (a, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *a -= f * p;
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for row in (0..n).rev() {
        for j in 0..m {
            let mut acc = aug[row][n + j];
            for k in (row + 1)..n {
                acc -= aug[row][k] * x[k][j];
            }
            x[row][j] = acc / aug[row][row];
        }
    }
    Ok(x)
}

pub(crate) fn inverse(a: &Matrix) -> Result<Matrix> {
    solve(a, &identity(a.len()))
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![vec![3.0], vec![5.0]];
        let x = solve(&a, &b).unwrap();
        assert!((x[0][0] - 0.8).abs() < 1e-14);
        assert!((x[1][0] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(inverse(&a), Err(Error::Singular)));
    }

    #[test]
    fn line_fit_is_exact_on_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v - 2.0).collect();
        let (s, c) = fit_line(&x, &y);
        assert!((s - 0.5).abs() < 1e-14 && (c + 2.0).abs() < 1e-14);
    }
}
