use super::MildDistribution;
use crate::measures::{Atom, AtomicMeasure};
use crate::numeric::{binomial, factorial, min_norm_solve};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// `int_{-1}^{1} exp(-1 / (1 - x^2)) dx`, the normalizer of the bump.
pub const MOLLIFIER_INTEGRAL: f64 = 0.443_993_816_168_079;

/// Weights `c_i` with `sum_i c_i f(h x_i) ~ d^I f(0)`.
///
/// The moment system `sum_i c_i x_i^J / J! = [J = I]` is imposed for all
/// monomials up to the largest total degree `D` the node count supports,
/// and solved for the minimum-norm weights. Weights are returned already
/// divided by `h^|I|`.
pub fn stencil(index: &[u32], nodes: &[Vec<f64>], h: f64) -> Result<Vec<f64>> {
    let m = index.len();
    if m == 0 {
        return Err(Error::InvalidInput("empty multi-index".into()));
    }
    if let Some(bad) = nodes.iter().find(|x| x.len() != m) {
        return Err(Error::Dimension(format!(
            "node of dimension {} for a multi-index of length {m}",
            bad.len()
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("stencil scale {h} must be positive")));
    }
    let order: u32 = index.iter().sum();
    let count = |deg: usize| binomial(m + deg, deg);
    if count(order as usize) > nodes.len() {
        return Err(Error::RankDeficient {
            deficiency: count(order as usize) - nodes.len(),
        });
    }
    let mut degree = order as usize;
    while count(degree + 1) <= nodes.len() {
        degree += 1;
    }
    let monomials = monomials(m, degree);
    let a = DMatrix::from_fn(monomials.len(), nodes.len(), |r, c| {
        monomials[r]
            .iter()
            .zip(&nodes[c])
            .map(|(&e, &x)| x.powi(e as i32) / factorial(e))
            .product()
    });
    let b = DVector::from_fn(monomials.len(), |r, _| if monomials[r] == index { 1.0 } else { 0.0 });
    let (c, rank) = min_norm_solve(&a, &b, 1e-12);
    if rank < monomials.len() {
        return Err(Error::RankDeficient {
            deficiency: monomials.len() - rank,
        });
    }
    let scale = h.powi(order as i32);
    Ok(c.iter().map(|w| w / scale).collect())
}

/// Exponent vectors of total degree `<= degree` in `m` variables, graded.
fn monomials(m: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(slot: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[slot] = e;
            rec(slot + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        rec(0, total, &mut vec![0; m], &mut out);
    }
    out
}

/// Midpoint nodes on `[-1, 1]` and discrete bump weights summing to one.
pub fn mollifier_weights(q: usize) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..q).map(|j| -1.0 + (2 * j + 1) as f64 / q as f64).collect();
    let raw: Vec<f64> = nodes.iter().map(|&x| (-1.0 / (1.0 - x * x)).exp()).collect();
    let total: f64 = raw.iter().sum();
    (nodes, raw.into_iter().map(|w| w / total).collect())
}

/// Mollify `eta` at width `t` along every flat coordinate of `T^nM`.
///
/// Realizes `<eta, psi * f>` as an order-zero signed cloud: each derivative
/// becomes a central stencil at step `t` over translated atoms, and the
/// tensor bump is integrated with a `q`-point midpoint rule per axis. The
/// cloud has `q^((n+1)d)` atoms per stencil node per source atom.
pub fn smooth(eta: &MildDistribution, t: f64, q: usize) -> Result<AtomicMeasure> {
    if !(t > 0.0) || q == 0 {
        return Err(Error::InvalidInput("smoothing needs t > 0 and q >= 1".into()));
    }
    let len = (eta.n() + 1) * eta.dim();
    let (nodes, weights) = mollifier_weights(q);
    let grid = q.pow(len as u32);
    let mut atoms = Vec::new();
    for term in eta.terms() {
        let stencil_points = term_stencil(term.index.orders(), t)?;
        let sign = term.index.sign();
        for a in term.base.atoms() {
            for (offset, c) in &stencil_points {
                for flat in 0..grid {
                    let mut delta = offset.clone();
                    let mut w = sign * a.weight * c;
                    let mut rem = flat;
                    for slot in delta.iter_mut() {
                        let j = rem % q;
                        rem /= q;
                        *slot += t * nodes[j];
                        w *= weights[j];
                    }
                    atoms.push(Atom::new(a.point.shifted(&delta), w));
                }
            }
        }
    }
    AtomicMeasure::signed(eta.dim(), eta.n(), atoms)
}

/// Tensor product of 1-D central stencils, one per differentiated axis.
fn term_stencil(orders: &[u32], h: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut out = vec![(vec![0.0; orders.len()], 1.0)];
    for (axis, &k) in orders.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let nodes: Vec<Vec<f64>> = (0..=k).map(|j| vec![j as f64 - 0.5 * k as f64]).collect();
        let weights = stencil(&[k], &nodes, h)?;
        let mut next = Vec::with_capacity(out.len() * nodes.len());
        for (offset, c) in &out {
            for (x, w) in nodes.iter().zip(&weights) {
                let mut o = offset.clone();
                o[axis] += h * x[0];
                next.push((o, c * w));
            }
        }
        out = next;
    }
    Ok(out)
}
