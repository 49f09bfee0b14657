//! Mild distributions `eta = sum_I d^I nu_I` over atomic measures, their
//! pairing with test functions, and the tangency conditions a distribution
//! must meet to be the derivative of a family of holonomic probabilities.

mod positivity;
mod stencil;
mod test_fn;
mod transport;

pub use positivity::{check_pos_plus, check_pos_structural, PosReport, TermDiagnostic};
pub use stencil::{mollifier_weights, smooth, stencil, MOLLIFIER_INTEGRAL};
pub use test_fn::{
    fd_derivative, BaseFunction, Closure, Constant, LocalCoordinate, PolyTrigFunction, TestFunction,
    FD_STEPS,
};
pub use transport::{continuity_field, ContinuityField};

use crate::geometry::FourierForm;
use crate::measures::{AtomJson, AtomicMeasure};
use crate::numeric::pairwise_sum;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Derivative orders over the `(n + 1) d` flat coordinates of `T^nM`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    orders: Vec<u32>,
}

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        Self { orders }
    }

    pub fn zero(len: usize) -> Self {
        Self { orders: vec![0; len] }
    }

    pub fn unit(len: usize, q: usize) -> Self {
        let mut orders = vec![0; len];
        orders[q] = 1;
        Self { orders }
    }

    /// Index `d / d x_j`.
    pub fn base(d: usize, n: usize, j: usize) -> Self {
        Self::unit((n + 1) * d, j)
    }

    /// Index `d / d v_ij`.
    pub fn fiber(d: usize, n: usize, i: usize, j: usize) -> Self {
        Self::unit((n + 1) * d, d + i * d + j)
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// `|I|`.
    pub fn order(&self) -> u32 {
        self.orders.iter().sum()
    }

    pub fn with_added(&self, q: usize) -> Self {
        let mut orders = self.orders.clone();
        orders[q] += 1;
        Self { orders }
    }

    pub fn sign(&self) -> f64 {
        if self.order() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTerm {
    pub index: MultiIndex,
    pub base: AtomicMeasure,
}

/// Finite sum of coordinate derivatives of signed atomic measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MildDistribution {
    d: usize,
    n: usize,
    terms: Vec<DistributionTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermJson {
    index: Vec<u32>,
    atoms: Vec<AtomJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistributionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    terms: Vec<TermJson>,
}

impl MildDistribution {
    pub fn zero(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            terms: Vec::new(),
        }
    }

    /// Order-zero distribution `nu` (signed weights allowed).
    pub fn from_measure(nu: AtomicMeasure) -> Self {
        let mut eta = Self::zero(nu.dim(), nu.n());
        let len = (nu.n() + 1) * nu.dim();
        eta.terms.push(DistributionTerm {
            index: MultiIndex::zero(len),
            base: nu,
        });
        eta
    }

    pub fn push(&mut self, index: MultiIndex, base: AtomicMeasure) -> Result<()> {
        if base.dim() != self.d || base.n() != self.n {
            return Err(Error::Dimension("distribution term on a different phase space".into()));
        }
        if index.len() != (self.n + 1) * self.d {
            return Err(Error::Dimension(format!(
                "multi-index of length {} for {} phase coordinates",
                index.len(),
                (self.n + 1) * self.d
            )));
        }
        if !base.is_empty() {
            self.terms.push(DistributionTerm { index, base });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[DistributionTerm] {
        &self.terms
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.index.order()).max().unwrap_or(0)
    }

    /// True when every atom weight vanishes.
    pub fn is_zero(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.base.atoms().iter().all(|a| a.weight == 0.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d: self.d,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| DistributionTerm {
                    index: t.index.clone(),
                    base: t.base.scaled(s),
                })
                .collect(),
        }
    }

    /// Sum of two distributions (term concatenation).
    pub fn sum(&self, other: &MildDistribution) -> Result<Self> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Dimension("adding distributions on different phase spaces".into()));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    /// `<eta, f> = sum_I (-1)^|I| sum_a w_a (d^I f)(p_a)`.
    pub fn pair(&self, f: &dyn TestFunction) -> Result<f64> {
        let mut parts = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let v = t.base.try_integrate(|p| f.derivative(p, &t.index))?;
            parts.push(t.index.sign() * v);
        }
        Ok(pairwise_sum(&parts))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DistributionJson {
            d: Some(self.d),
            n: Some(self.n),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    index: t.index.orders().to_vec(),
                    atoms: t.base.atoms().iter().map(AtomJson::from_atom).collect(),
                })
                .collect(),
        })
        .expect("distribution serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: DistributionJson = serde_json::from_value(value.clone())?;
        let first_atom = raw.terms.iter().flat_map(|t| t.atoms.first()).next();
        let d = raw
            .d
            .or_else(|| first_atom.map(|a| a.x.len()))
            .ok_or_else(|| Error::InvalidInput("cannot infer d of an empty distribution".into()))?;
        let n = raw
            .n
            .or_else(|| first_atom.map(|a| a.v.len()))
            .ok_or_else(|| Error::InvalidInput("cannot infer n of an empty distribution".into()))?;
        let mut eta = Self::zero(d, n);
        for t in raw.terms {
            let atoms = t
                .atoms
                .into_iter()
                .map(AtomJson::into_atom)
                .collect::<Result<Vec<_>>>()?;
            eta.push(MultiIndex::new(t.index), AtomicMeasure::signed(d, n, atoms)?)?;
        }
        Ok(eta)
    }
}

/// Free-function form of [`MildDistribution::pair`].
pub fn pair(eta: &MildDistribution, f: &dyn TestFunction) -> Result<f64> {
    eta.pair(f)
}

/// Outcome of a tangency check: labelled residuals and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub pass: bool,
    pub tol: f64,
    pub max_abs: f64,
    pub residuals: Vec<(String, f64)>,
}

impl CheckReport {
    fn from_residuals(residuals: Vec<(String, f64)>, tol: f64) -> Self {
        let max_abs = residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
        Self {
            pass: max_abs <= tol,
            tol,
            max_abs,
            residuals,
        }
    }
}

/// (Prob): `<eta, 1> = 0`. Only order-zero terms contribute.
pub fn check_prob(eta: &MildDistribution, tol: f64) -> CheckReport {
    let parts: Vec<f64> = eta
        .terms
        .iter()
        .filter(|t| t.index.order() == 0)
        .map(|t| t.base.total_weight())
        .collect();
    CheckReport::from_residuals(vec![("<eta,1>".into(), pairwise_sum(&parts))], tol)
}

fn form_residuals(eta: &MildDistribution, forms: &[(String, FourierForm)]) -> Result<Vec<(String, f64)>> {
    forms
        .iter()
        .map(|(label, w)| Ok((label.clone(), eta.pair(w)?)))
        .collect()
}

/// (Hol): `<eta, d omega_b> = 0` over the degree-`(n-1)` basis with cutoff `k`.
pub fn check_hol(eta: &MildDistribution, k: u32, tol: f64) -> Result<CheckReport> {
    let forms = FourierForm::exact_basis(eta.d, eta.n, k);
    Ok(CheckReport::from_residuals(form_residuals(eta, &forms)?, tol))
}

/// (Hom): pairings with the closed forms, i.e. the constant `dx_J` followed
/// by the exact forms of [`check_hol`].
pub fn check_hom(eta: &MildDistribution, k: u32, tol: f64) -> Result<CheckReport> {
    let mut forms = FourierForm::constant_basis(eta.d, eta.n);
    forms.extend(FourierForm::exact_basis(eta.d, eta.n, k));
    Ok(CheckReport::from_residuals(form_residuals(eta, &forms)?, tol))
}

#[cfg(test)]
pub(crate) fn phase(x: &[f64], v: &[&[f64]]) -> crate::geometry::PhasePoint {
    crate::geometry::PhasePoint::new(x.to_vec(), v.iter().map(|f| f.to_vec()).collect()).expect("valid phase point")
}
