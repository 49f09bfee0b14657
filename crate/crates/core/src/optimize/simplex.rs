//! Two-phase revised simplex. Pricing is Dantzig's rule, switching to
//! Bland's rule after a run of degenerate pivots and back once the objective
//! moves, so cycling is impossible. The basis matrix is refactorized from the
//! original data at every pivot, so long degenerate runs do not accumulate
//! rounding.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, LU};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const ZERO_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before falling back to Bland's rule.
const STALL_LIMIT: usize = 50;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Basic columns at the optimum.
    pub basis: Vec<usize>,
    /// Rows found linearly dependent on the others.
    pub redundant: Vec<usize>,
}

/// Columns `0..n` are the structural variables, `n..n + m` the artificials.
struct Problem {
    n: usize,
    /// Column-major structural part, rows sign-flipped so that `b >= 0`.
    cols: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// Original row index of every kept row.
    rows: Vec<usize>,
    basis: Vec<usize>,
}

type Factor = LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

impl Problem {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            DVector::from_column_slice(&self.cols[j])
        } else {
            let r = j - self.n;
            DVector::from_fn(self.m(), |i, _| if self.rows[i] == r { 1.0 } else { 0.0 })
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut bmat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.column(j));
        }
        bmat
    }

    fn factor(&self) -> Result<Factor> {
        let lu = self.basis_matrix().lu();
        if !lu.is_invertible() {
            return Err(Error::RankDeficient { deficiency: 1 });
        }
        Ok(lu)
    }

    fn basic_values(&self, lu: &Factor) -> DVector<f64> {
        let mut x = lu.solve(&DVector::from_column_slice(&self.b)).expect("invertible basis");
        for v in x.iter_mut() {
            // degenerate basics must be exactly zero for Bland's rule to
            // break ties consistently
            if v.abs() <= ZERO_TOL {
                *v = 0.0;
            }
        }
        x
    }

    /// Solution of `B^T y = rhs`.
    fn solve_transposed(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.basis_matrix().transpose().lu().solve(rhs).expect("invertible basis")
    }

    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, allowed: &dyn Fn(usize) -> bool, iterations: &mut usize) -> Result<()> {
        let total = self.n + self.rows.iter().max().map_or(0, |r| r + 1);
        let mut stall = 0;
        loop {
            if *iterations >= MAX_ITERATIONS {
                return Err(Error::InvalidInput("simplex iteration limit reached".into()));
            }
            let lu = self.factor()?;
            let x = self.basic_values(&lu);
            let y = self.solve_transposed(&DVector::from_fn(self.m(), |k, _| cost(self.basis[k])));
            let reduced = |j: usize| cost(j) - y.dot(&self.column(j));
            let candidates = (0..total).filter(|&j| allowed(j) && !self.basis.contains(&j));
            let entering = if stall >= STALL_LIMIT {
                candidates.into_iter().find(|&j| reduced(j) < -COST_TOL)
            } else {
                candidates
                    .map(|j| (j, reduced(j)))
                    .filter(|&(_, r)| r < -COST_TOL)
                    .fold(None, |best: Option<(usize, f64)>, cur| match best {
                        Some(b) if b.1 <= cur.1 => Some(b),
                        _ => Some(cur),
                    })
                    .map(|(j, _)| j)
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let d = lu.solve(&self.column(c)).expect("invertible basis");
            let mut leave: Option<(usize, f64)> = None;
            for k in 0..self.m() {
                if d[k] > PIVOT_TOL {
                    let ratio = x[k].max(0.0) / d[k];
                    leave = match leave {
                        None => Some((k, ratio)),
                        Some((lk, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[k] < self.basis[lk] {
                                Some((k, ratio))
                            } else {
                                Some((lk, lratio))
                            }
                        }
                    };
                }
            }
            let Some((k, step)) = leave else {
                return Err(Error::Unbounded { column: c });
            };
            stall = if step == 0.0 { stall + 1 } else { 0 };
            self.basis[k] = c;
            *iterations += 1;
        }
    }
}

/// Minimize `c . x` subject to `A x = b`, `x >= 0`.
pub(crate) fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<SimplexResult> {
    let (m, n) = (a.len(), c.len());
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let signs: Vec<f64> = b.iter().map(|&bi| if bi < 0.0 { -1.0 } else { 1.0 }).collect();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| signs[i] * a[i][j]).collect()).collect();
    let mut p = Problem {
        n,
        cols,
        b: b.iter().zip(&signs).map(|(bi, s)| bi * s).collect(),
        rows: (0..m).collect(),
        basis: (n..n + m).collect(),
    };
    let mut iterations = 0;
    p.optimize(&|j| if j < n { 0.0 } else { 1.0 }, &|_| true, &mut iterations)?;
    let lu = p.factor()?;
    let x = p.basic_values(&lu);
    let artificial: Vec<(usize, f64)> = p
        .basis
        .iter()
        .zip(x.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(&j, &v)| (j - n, v))
        .collect();
    if artificial.iter().map(|(_, v)| v).sum::<f64>() > 1e-9 * scale {
        let (row, residual) = artificial
            .iter()
            .copied()
            .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        return Err(Error::Infeasible { row, residual });
    }
    // drive zero-level artificials out of the basis; rows where that is
    // impossible are linear combinations of the others
    let mut redundant = Vec::new();
    while let Some(k) = p.basis.iter().position(|&j| j >= n) {
        // row k of B^{-1} A is z^T A with B^T z = e_k
        let mut ek = DVector::zeros(p.m());
        ek[k] = 1.0;
        let z = p.solve_transposed(&ek);
        let swap = (0..n).find(|&j| !p.basis.contains(&j) && z.dot(&p.column(j)).abs() > PIVOT_TOL);
        match swap {
            Some(j) => {
                p.basis[k] = j;
                iterations += 1;
            }
            None => {
                let row = p.basis[k] - n;
                let pos = p.rows.iter().position(|&r| r == row).expect("kept row");
                redundant.push(row);
                p.basis.remove(k);
                p.rows.remove(pos);
                p.b.remove(pos);
                for col in p.cols.iter_mut() {
                    col.remove(pos);
                }
            }
        }
    }
    p.optimize(&|j| if j < n { c[j] } else { 0.0 }, &|j| j < n, &mut iterations)?;

    let lu = p.factor()?;
    let xb = p.basic_values(&lu);
    let mut x = vec![0.0; n];
    for (k, &col) in p.basis.iter().enumerate() {
        let v = xb[k];
        if v < -1e-9 * scale {
            return Err(Error::Inconsistent { residual: -v });
        }
        x[col] = v.max(0.0);
    }
    let misfit = (0..m)
        .map(|i| (a[i].iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>() - b[i]).abs())
        .fold(0.0, f64::max);
    if misfit > 1e-9 * scale {
        return Err(Error::Inconsistent { residual: misfit });
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    Ok(SimplexResult {
        x,
        objective,
        iterations,
        basis: p.basis,
        redundant,
    })
}
