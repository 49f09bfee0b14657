//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so results are reproducible bit for bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Determinant of a small dense square matrix given row by row.
pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    match n {
        0 => 1.0,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let r = rows;
            r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
                - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
        }
        _ => {
            let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            m.determinant()
        }
    }
}

/// Cofactor matrix `C[i][j] = (-1)^(i+j) det(minor(i, j))`.
pub fn cofactors(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 1 {
        return vec![vec![1.0]];
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            out[i][j] = sign * determinant(&minor);
        }
    }
    out
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
///
/// Complete orthogonal decomposition: a column-pivoted QR `A P = Q R`
/// truncated at the first diagonal entry below `rel_tol * |R_00|`, then a QR
/// of the retained rows to reach the minimum-norm solution. Returns the
/// solution together with the numerical rank.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, usize) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (DVector::zeros(n), 0);
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    let rank = (0..m.min(n))
        .take_while(|&i| r[(i, i)].abs() > rel_tol * lead && r[(i, i)] != 0.0)
        .count();
    if rank == 0 {
        return (DVector::zeros(n), 0);
    }
    let qtb = qr.q().transpose() * b;
    let second = r.rows(0, rank).transpose().qr();
    let t = second.r();
    let w = t
        .transpose()
        .solve_lower_triangular(&qtb.rows(0, rank).into_owned())
        .expect("retained diagonal is nonzero");
    let mut x = second.q() * w;
    qr.p().inv_permute_rows(&mut x);
    (x, rank)
}

/// Nearest-image representative of `delta` in `[-1/2, 1/2]`.
pub fn wrap_delta(delta: f64) -> f64 {
    delta - delta.round()
}

/// Reduce a coordinate to `[0, 1)`.
pub fn wrap_unit(c: f64) -> f64 {
    let r = c.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// All `k`-element subsets of `0..d` in lexicographic order.
pub fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// Weighted mean and variance (weights need not be normalized).
pub fn weighted_mean_variance(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let total = pairwise_sum(weights);
    if values.is_empty() || total == 0.0 {
        return (0.0, 0.0);
    }
    let prod: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let mean = pairwise_sum(&prod) / total;
    let sq: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .collect();
    (mean, pairwise_sum(&sq) / total)
}

/// Least-squares slope of `ln(err)` against `ln(t)`.
pub fn log_log_slope(ts: &[f64], errs: &[f64]) -> Option<f64> {
    if ts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let v: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn cofactors_of_identity() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(cofactors(&id), id);
        assert_eq!(determinant(&id), 1.0);
    }

    #[test]
    fn min_norm_solution_of_underdetermined_system() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let (x, rank) = min_norm_solve(&a, &b, 1e-12);
        assert_eq!(rank, 1);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn min_norm_solution_of_rank_deficient_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let (x, rank) = min_norm_solve(&a, &b, 1e-12);
        assert_eq!(rank, 1);
        assert!((x[0] - 2.0 / 35.0).abs() < 1e-15 && (x[1] - 4.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_singular_values_solve_to_rounding() {
        let a = DMatrix::from_fn(6, 6, |i, j| if i == j { 10.0 } else { 1e-3 * ((i * j) as f64).sin() });
        let b = DVector::from_fn(6, |i, _| i as f64 + 1.0);
        let (x, rank) = min_norm_solve(&a, &b, 1e-12);
        assert_eq!(rank, 6);
        assert!((&a * x - b).amax() < 1e-13);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert!((wrap_unit(1.25) - 0.25).abs() < 1e-15);
        assert!((wrap_delta(0.9) + 0.1).abs() < 1e-15);
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(binomial(4, 2), 6);
    }
}
