use super::{MildDistribution, TestFunction};
use crate::measures::AtomicMeasure;
use crate::Result;
use nalgebra::DMatrix;
use serde::Serialize;

/// Singular values below this fraction of the largest do not span the
/// estimated tangent space.
const SPECTRAL_CUTOFF: f64 = 0.1;
const TANGENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermDiagnostic {
    pub term: usize,
    pub order: u32,
    /// Largest distance from an atom of the term to the nearest atom of `mu`.
    pub support_distance: f64,
    /// Largest derivative order transverse to the estimated tangent space.
    pub transverse_order: u32,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosReport {
    pub pass: bool,
    pub radius: f64,
    pub terms: Vec<TermDiagnostic>,
}

/// Necessary structural condition for (Pos), not a certificate.
///
/// Every atom of `eta` must lie within `r` of `supp mu`. At each atom the
/// tangent space of the support is estimated from the principal directions
/// of the neighbors within `r`; the derivative orders of the term along
/// coordinate axes that are not tangent must total at most one.
pub fn check_pos_structural(eta: &MildDistribution, mu: &AtomicMeasure, r: f64) -> PosReport {
    let support: Vec<_> = mu.atoms().iter().filter(|a| a.weight != 0.0).collect();
    let mut terms = Vec::with_capacity(eta.terms().len());
    for (t, term) in eta.terms().iter().enumerate() {
        let orders = term.index.orders();
        let mut support_distance: f64 = 0.0;
        let mut transverse_order = 0;
        for atom in term.base.atoms().iter().filter(|a| a.weight != 0.0) {
            let displacements: Vec<Vec<f64>> = support
                .iter()
                .map(|s| atom.point.displacement_to(&s.point))
                .collect();
            let nearest = displacements
                .iter()
                .map(|d| d.iter().map(|c| c * c).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            support_distance = support_distance.max(nearest);
            let neighbors: Vec<&Vec<f64>> = displacements
                .iter()
                .filter(|d| d.iter().map(|c| c * c).sum::<f64>().sqrt() <= r)
                .collect();
            let tangent = tangent_axes(&neighbors, orders.len());
            let transverse: u32 = orders
                .iter()
                .zip(&tangent)
                .filter(|(_, &tan)| !tan)
                .map(|(&o, _)| o)
                .sum();
            transverse_order = transverse_order.max(transverse);
        }
        let pass = support_distance <= r && transverse_order <= 1;
        terms.push(TermDiagnostic {
            term: t,
            order: term.index.order(),
            support_distance,
            transverse_order,
            pass,
        });
    }
    PosReport {
        pass: terms.iter().all(|t| t.pass),
        radius: r,
        terms,
    }
}

/// Flags for the coordinate axes lying in the principal subspace of the
/// centered neighbor displacements.
fn tangent_axes(neighbors: &[&Vec<f64>], dim: usize) -> Vec<bool> {
    if neighbors.len() < 2 {
        return vec![false; dim];
    }
    let k = neighbors.len();
    let mean: Vec<f64> = (0..dim)
        .map(|q| neighbors.iter().map(|d| d[q]).sum::<f64>() / k as f64)
        .collect();
    let m = DMatrix::from_fn(k, dim, |i, q| neighbors[i][q] - mean[q]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax <= 1e-14 {
        return vec![false; dim];
    }
    let basis: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPECTRAL_CUTOFF * smax)
        .collect();
    (0..dim)
        .map(|q| {
            // |e_q - P e_q|^2 = 1 - sum_b (v_b . e_q)^2
            let proj: f64 = basis.iter().map(|&b| v_t[(b, q)] * v_t[(b, q)]).sum();
            (1.0 - proj).max(0.0).sqrt() <= TANGENT_TOL
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosPlusReport {
    pub pass: bool,
    pub tol: f64,
    pub min_value: f64,
    pub values: Vec<(String, f64)>,
}

/// (Pos+) on a caller-supplied battery of nonnegative test functions that
/// vanish on `supp mu`: every pairing must be `>= -tol`.
pub fn check_pos_plus(eta: &MildDistribution, battery: &[&dyn TestFunction], tol: f64) -> Result<PosPlusReport> {
    let mut values = Vec::with_capacity(battery.len());
    for f in battery {
        values.push((f.label(), eta.pair(*f)?));
    }
    let min_value = values.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(PosPlusReport {
        pass: values.iter().all(|(_, v)| *v >= -tol),
        tol,
        min_value,
        values,
    })
}
