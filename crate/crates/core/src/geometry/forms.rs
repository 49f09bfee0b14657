use super::trig::{Harmonic, Phase, TrigPolynomial, TrigTerm};
use super::PhasePoint;
use crate::numeric::{cofactors, determinant, subsets};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Differential `k`-form on the `d`-torus with trigonometric-polynomial
/// coefficients, `sum_J a_J(x) dx_J` over increasing axis subsets `J`.
///
/// Forms of degree `n` double as functions on `T^nM`: the value at
/// `(x, v_1, ..., v_n)` is `sum_J a_J(x) det(v_{i, j_k})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierForm {
    dim: usize,
    degree: usize,
    components: BTreeMap<Vec<usize>, TrigPolynomial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FormTermJson {
    axes: Vec<usize>,
    freq: Vec<i32>,
    phase: Phase,
    coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FormJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    degree: usize,
    terms: Vec<FormTermJson>,
}

/// Sort `axes`, returning the permutation sign, or `None` on a repeated axis.
fn sort_axes(axes: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = axes.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            } else if v[j] == v[j + 1] {
                return None;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

impl FourierForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            components: BTreeMap::new(),
        }
    }

    /// The constant form `dx_J`.
    pub fn constant(dim: usize, axes: &[usize]) -> Result<Self> {
        let mut f = Self::zero(dim, axes.len());
        f.add_term(axes, vec![0; dim], Phase::Cos, 1.0)?;
        Ok(f)
    }

    /// A 0-form from a trigonometric polynomial.
    pub fn function(p: TrigPolynomial) -> Self {
        let mut f = Self::zero(p.dim(), 0);
        if !p.is_zero() {
            f.components.insert(Vec::new(), p);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn add_term(&mut self, axes: &[usize], freq: Vec<i32>, phase: Phase, coeff: f64) -> Result<()> {
        if axes.len() != self.degree {
            return Err(Error::Degree {
                expected: self.degree,
                found: axes.len(),
            });
        }
        if axes.iter().any(|&a| a >= self.dim) || freq.len() != self.dim {
            return Err(Error::Dimension(format!(
                "term axes {axes:?} / frequency {freq:?} on a {}-torus",
                self.dim
            )));
        }
        let Some((sorted, sign)) = sort_axes(axes) else {
            return Ok(());
        };
        let dim = self.dim;
        let entry = self
            .components
            .entry(sorted)
            .or_insert_with(|| TrigPolynomial::zero(dim));
        entry.add_term(freq, phase, sign * coeff);
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &FourierForm, scale: f64) -> Result<()> {
        if other.degree != self.degree || other.dim != self.dim {
            return Err(Error::Degree {
                expected: self.degree,
                found: other.degree,
            });
        }
        let dim = self.dim;
        for (axes, p) in &other.components {
            self.components
                .entry(axes.clone())
                .or_insert_with(|| TrigPolynomial::zero(dim))
                .add_scaled(p, scale);
        }
        Ok(())
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &TrigPolynomial)> {
        self.components.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|p| p.is_zero())
    }

    pub fn max_frequency(&self) -> u32 {
        self.components
            .values()
            .map(|p| p.max_frequency())
            .max()
            .unwrap_or(0)
    }

    /// True when every coefficient is a constant.
    pub fn is_constant(&self) -> bool {
        self.components
            .values()
            .all(|p| p.terms().all(|(h, c)| c == 0.0 || h.is_constant()))
    }

    /// Exterior derivative by symbolic differentiation of the coefficients.
    pub fn exterior_derivative(&self) -> Result<FourierForm> {
        if self.degree >= self.dim {
            return Err(Error::Degree {
                expected: self.dim - 1,
                found: self.degree,
            });
        }
        let mut out = FourierForm::zero(self.dim, self.degree + 1);
        for (axes, coeff) in &self.components {
            for j in 0..self.dim {
                if axes.contains(&j) {
                    continue;
                }
                let partial = coeff.partial(j);
                if partial.is_zero() {
                    continue;
                }
                // dx_j ^ dx_J: move dx_j past the axes of J smaller than j
                let before = axes.iter().filter(|&&a| a < j).count();
                let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
                let mut merged = axes.clone();
                merged.insert(before, j);
                let dim = self.dim;
                out.components
                    .entry(merged)
                    .or_insert_with(|| TrigPolynomial::zero(dim))
                    .add_scaled(&partial, sign);
            }
        }
        out.components.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    fn check_point(&self, p: &PhasePoint) -> Result<()> {
        if p.n() != self.degree {
            return Err(Error::Degree {
                expected: p.n(),
                found: self.degree,
            });
        }
        if p.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "{}-torus form evaluated at a point of the {}-torus",
                self.dim,
                p.dim()
            )));
        }
        Ok(())
    }

    fn minor(p: &PhasePoint, axes: &[usize]) -> Vec<Vec<f64>> {
        p.fibers()
            .iter()
            .map(|v| axes.iter().map(|&j| v[j]).collect())
            .collect()
    }

    /// Value of the form on the fiber multivector of `p`.
    pub fn eval(&self, p: &PhasePoint) -> Result<f64> {
        self.check_point(p)?;
        Ok(self
            .components
            .iter()
            .map(|(axes, a)| a.value(p.x()) * determinant(&Self::minor(p, axes)))
            .sum())
    }

    /// Gradient of `p -> eval(p)` with respect to each fiber, `n x d`.
    pub fn fiber_gradient(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>> {
        self.check_point(p)?;
        let n = p.n();
        let mut grad = vec![vec![0.0; self.dim]; n];
        for (axes, a) in &self.components {
            let coeff = a.value(p.x());
            if coeff == 0.0 {
                continue;
            }
            let cof = cofactors(&Self::minor(p, axes));
            for (i, row) in grad.iter_mut().enumerate() {
                for (k, &j) in axes.iter().enumerate() {
                    row[j] += coeff * cof[i][k];
                }
            }
        }
        Ok(grad)
    }

    /// Mixed partial derivative of the form-as-function in flat phase
    /// coordinates (base axes, then fiber blocks). Exact: the function is
    /// trigonometric in `x` and multilinear in the fibers.
    pub fn derivative(&self, p: &PhasePoint, orders: &[u32]) -> Result<f64> {
        self.check_point(p)?;
        let d = self.dim;
        let n = p.n();
        if orders.len() != (n + 1) * d {
            return Err(Error::Dimension(format!(
                "multi-index of length {} for {} phase coordinates",
                orders.len(),
                (n + 1) * d
            )));
        }
        let alpha = &orders[..d];
        // at most one derivative per fiber survives multilinearity
        let mut fiber_axis: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let block = &orders[d + i * d..d + (i + 1) * d];
            let total: u32 = block.iter().sum();
            if total > 1 {
                return Ok(0.0);
            }
            if total == 1 {
                fiber_axis[i] = block.iter().position(|&o| o == 1);
            }
        }
        let mut sum = 0.0;
        for (axes, a) in &self.components {
            let mut rows = Self::minor(p, axes);
            let mut vanishes = false;
            for (i, sel) in fiber_axis.iter().enumerate() {
                if let Some(j) = sel {
                    match axes.iter().position(|a| a == j) {
                        Some(col) => {
                            rows[i] = vec![0.0; axes.len()];
                            rows[i][col] = 1.0;
                        }
                        None => {
                            vanishes = true;
                            break;
                        }
                    }
                }
            }
            if vanishes {
                continue;
            }
            let det = determinant(&rows);
            if det != 0.0 {
                sum += a.derivative(p.x(), alpha) * det;
            }
        }
        Ok(sum)
    }

    /// Single-term forms `cos/sin(2 pi m.x) dx_J` for every axis subset of
    /// size `degree` and every canonical mode with `|m|_inf <= cutoff`.
    pub fn basis(dim: usize, degree: usize, cutoff: u32) -> Vec<FourierForm> {
        let modes = Harmonic::basis(dim, cutoff);
        let mut out = Vec::new();
        for axes in subsets(dim, degree) {
            for h in &modes {
                let mut f = FourierForm::zero(dim, degree);
                f.add_term(&axes, h.freq.clone(), h.phase, 1.0)
                    .expect("basis term is well formed");
                out.push(f);
            }
        }
        out
    }

    /// Exact `n`-forms `d omega_b` over the degree-`(n-1)` basis, skipping
    /// basis elements whose derivative vanishes (constant coefficients).
    pub fn exact_basis(dim: usize, n: usize, cutoff: u32) -> Vec<(String, FourierForm)> {
        if n == 0 || n > dim {
            return Vec::new();
        }
        FourierForm::basis(dim, n - 1, cutoff)
            .into_iter()
            .filter_map(|w| {
                let dw = w.exterior_derivative().ok()?;
                if dw.is_zero() {
                    None
                } else {
                    Some((format!("d[{}]", w.label()), dw))
                }
            })
            .collect()
    }

    /// Constant forms `dx_J` for every `J` of size `n`, lexicographic.
    pub fn constant_basis(dim: usize, n: usize) -> Vec<(String, FourierForm)> {
        subsets(dim, n)
            .into_iter()
            .map(|axes| {
                let label = format!(
                    "dx{}",
                    axes.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join("^dx")
                );
                (label, FourierForm::constant(dim, &axes).expect("valid axes"))
            })
            .collect()
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (axes, p) in &self.components {
            for (h, c) in p.terms() {
                if c == 0.0 {
                    continue;
                }
                let dx = if axes.is_empty() {
                    String::new()
                } else {
                    format!(
                        " dx{}",
                        axes.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join("^dx")
                    )
                };
                let head = if c == 1.0 { String::new() } else { format!("{c}*") };
                parts.push(format!("{head}{}{dx}", h.label()));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms = self
            .components
            .iter()
            .flat_map(|(axes, p)| {
                p.to_terms().into_iter().map(move |t: TrigTerm| FormTermJson {
                    axes: axes.clone(),
                    freq: t.freq,
                    phase: t.phase,
                    coeff: t.coeff,
                })
            })
            .collect();
        serde_json::to_value(FormJson {
            dim: Some(self.dim),
            degree: self.degree,
            terms,
        })
        .expect("form serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: FormJson = serde_json::from_value(value.clone())?;
        let dim = match raw.dim {
            Some(d) => d,
            None => raw
                .terms
                .first()
                .map(|t| t.freq.len())
                .ok_or_else(|| Error::InvalidInput("form without terms needs an explicit dim".into()))?,
        };
        let mut f = FourierForm::zero(dim, raw.degree);
        for t in raw.terms {
            f.add_term(&t.axes, t.freq, t.phase, t.coeff)?;
        }
        Ok(f)
    }
}
