use super::{MildDistribution, TestFunction};
use crate::measures::AtomicMeasure;
use crate::numeric::min_norm_solve;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Least-weighted-norm transport field recovered from a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityField {
    /// Per atom, a vector over the `(n + 1) d` flat coordinates.
    pub field: Vec<Vec<f64>>,
    /// `max_f |<eta, f> - sum_a w_a grad f(p_a) . v_a|`.
    pub residual: f64,
    /// `sqrt(sum_a w_a |v_a|^2)`.
    pub norm: f64,
    pub rank: usize,
}

/// Minimize `sum_a w_a |v_a|^2` subject to
/// `<eta, f> = sum_a w_a grad f(p_a) . v_a` for every `f` in `tests`.
///
/// The minimizer is `v_a = sum_f lambda_f grad f(p_a)` with `lambda` the
/// minimum-norm solution of the Gram system
/// `G_fg = sum_a w_a grad f . grad g`. Constraints left unmet beyond `tol`
/// are an error.
pub fn continuity_field(
    mu: &AtomicMeasure,
    eta: &MildDistribution,
    tests: &[&dyn TestFunction],
    tol: f64,
) -> Result<ContinuityField> {
    if mu.atoms().iter().any(|a| !(a.weight > 0.0)) {
        return Err(Error::InvalidInput("transport recovery needs positive atom weights".into()));
    }
    let m = tests.len();
    let grads: Vec<Vec<Vec<f64>>> = tests
        .iter()
        .map(|f| mu.atoms().iter().map(|a| f.gradient(&a.point)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = mu.atoms().iter().map(|a| a.weight).collect();
    let targets: Vec<f64> = tests.iter().map(|f| eta.pair(*f)).collect::<Result<_>>()?;

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(m, m, |f, g| {
        weights
            .iter()
            .enumerate()
            .map(|(a, w)| w * dot(&grads[f][a], &grads[g][a]))
            .sum()
    });
    let (lambda, rank) = min_norm_solve(&gram, &DVector::from_vec(targets.clone()), 1e-12);

    let dim = (mu.n() + 1) * mu.dim();
    let field: Vec<Vec<f64>> = (0..mu.len())
        .map(|a| {
            let mut v = vec![0.0; dim];
            for f in 0..m {
                for (slot, g) in v.iter_mut().zip(&grads[f][a]) {
                    *slot += lambda[f] * g;
                }
            }
            v
        })
        .collect();
    let residual = (0..m)
        .map(|f| {
            let lhs: f64 = (0..mu.len()).map(|a| weights[a] * dot(&grads[f][a], &field[a])).sum();
            (lhs - targets[f]).abs()
        })
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::Inconsistent { residual });
    }
    let norm = (0..mu.len())
        .map(|a| weights[a] * dot(&field[a], &field[a]))
        .sum::<f64>()
        .sqrt();
    Ok(ContinuityField {
        field,
        residual,
        norm,
        rank,
    })
}
