use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    /// `k`-th derivative of cos/sin evaluated at `theta`.
    fn eval_derivative(self, theta: f64, k: u32) -> f64 {
        // sin(theta) = cos(theta + 3 pi/2); the k-th derivative adds k quarter turns
        let quarter = match self {
            Phase::Cos => k % 4,
            Phase::Sin => (k + 3) % 4,
        };
        match quarter {
            0 => theta.cos(),
            1 => -theta.sin(),
            2 => -theta.cos(),
            _ => theta.sin(),
        }
    }
}

/// A real Fourier mode `cos(2 pi m.x)` or `sin(2 pi m.x)`, stored in canonical
/// form: the first nonzero frequency entry is positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Harmonic {
    pub freq: Vec<i32>,
    pub phase: Phase,
}

impl Harmonic {
    /// Canonicalize `(freq, phase)`, returning the sign picked up by the
    /// flip `m -> -m`, or `None` when the mode vanishes identically.
    pub fn canonical(mut freq: Vec<i32>, phase: Phase) -> Option<(Harmonic, f64)> {
        let first = freq.iter().find(|&&m| m != 0).copied();
        match first {
            None => match phase {
                Phase::Cos => Some((Harmonic { freq, phase }, 1.0)),
                Phase::Sin => None,
            },
            Some(m) if m < 0 => {
                freq.iter_mut().for_each(|c| *c = -*c);
                let sign = if phase == Phase::Sin { -1.0 } else { 1.0 };
                Some((Harmonic { freq, phase }, sign))
            }
            Some(_) => Some((Harmonic { freq, phase }, 1.0)),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.freq.iter().all(|&m| m == 0)
    }

    pub fn max_frequency(&self) -> u32 {
        self.freq.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0)
    }

    fn angle(&self, x: &[f64]) -> f64 {
        TAU * self.freq.iter().zip(x).map(|(&m, c)| m as f64 * c).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.phase.eval_derivative(self.angle(x), 0)
    }

    /// Mixed partial derivative `d^alpha` of the mode at `x`.
    pub fn derivative(&self, x: &[f64], alpha: &[u32]) -> f64 {
        let order: u32 = alpha.iter().sum();
        let mut factor = 1.0;
        for (&m, &a) in self.freq.iter().zip(alpha) {
            if a > 0 {
                factor *= (TAU * m as f64).powi(a as i32);
            }
        }
        if factor == 0.0 {
            return 0.0;
        }
        factor * self.phase.eval_derivative(self.angle(x), order)
    }

    /// All canonical modes with `|m|_inf <= cutoff`, constant mode first,
    /// then lexicographic in `m` with cos before sin.
    pub fn basis(dim: usize, cutoff: u32) -> Vec<Harmonic> {
        let k = cutoff as i32;
        let side = (2 * k + 1) as usize;
        let total = side.pow(dim as u32);
        let mut out = vec![Harmonic {
            freq: vec![0; dim],
            phase: Phase::Cos,
        }];
        for idx in 0..total {
            let mut rem = idx;
            let mut freq = vec![0i32; dim];
            for slot in freq.iter_mut().rev() {
                *slot = (rem % side) as i32 - k;
                rem /= side;
            }
            match freq.iter().find(|&&m| m != 0) {
                Some(&m) if m > 0 => {
                    out.push(Harmonic {
                        freq: freq.clone(),
                        phase: Phase::Cos,
                    });
                    out.push(Harmonic {
                        freq,
                        phase: Phase::Sin,
                    });
                }
                _ => {}
            }
        }
        out
    }

    pub fn label(&self) -> String {
        let f: Vec<String> = self.freq.iter().map(|m| m.to_string()).collect();
        let p = match self.phase {
            Phase::Cos => "cos",
            Phase::Sin => "sin",
        };
        format!("{p}({})", f.join(","))
    }
}

/// Real trigonometric polynomial on the `d`-torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    terms: BTreeMap<Harmonic, f64>,
}

/// Flat serialized term, shared with the form and Lagrangian formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: Vec<i32>,
    pub phase: Phase,
    pub coeff: f64,
}

impl TrigPolynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], Phase::Cos, c);
        p
    }

    pub fn from_terms(dim: usize, terms: &[TrigTerm]) -> Result<Self> {
        let mut p = Self::zero(dim);
        for t in terms {
            if t.freq.len() != dim {
                return Err(Error::Dimension(format!(
                    "frequency vector of length {} on a {dim}-torus",
                    t.freq.len()
                )));
            }
            p.add_term(t.freq.clone(), t.phase, t.coeff);
        }
        Ok(p)
    }

    pub fn to_terms(&self) -> Vec<TrigTerm> {
        self.terms
            .iter()
            .map(|(h, &c)| TrigTerm {
                freq: h.freq.clone(),
                phase: h.phase,
                coeff: c,
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, freq: Vec<i32>, phase: Phase, coeff: f64) {
        debug_assert_eq!(freq.len(), self.dim);
        if coeff == 0.0 {
            return;
        }
        if let Some((h, sign)) = Harmonic::canonical(freq, phase) {
            let slot = self.terms.entry(h).or_insert(0.0);
            *slot += sign * coeff;
        }
    }

    pub fn add_scaled(&mut self, other: &TrigPolynomial, scale: f64) {
        for (h, &c) in &other.terms {
            self.add_term(h.freq.clone(), h.phase, scale * c);
        }
    }

    pub fn scaled(&self, s: f64) -> TrigPolynomial {
        let mut out = Self::zero(self.dim);
        out.add_scaled(self, s);
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Harmonic, f64)> {
        self.terms.iter().map(|(h, &c)| (h, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    pub fn max_frequency(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(h, _)| h.max_frequency())
            .max()
            .unwrap_or(0)
    }

    /// Upper bound for `sup |p|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(h, &c)| c * h.value(x)).sum()
    }

    pub fn derivative(&self, x: &[f64], alpha: &[u32]) -> f64 {
        self.terms
            .iter()
            .map(|(h, &c)| c * h.derivative(x, alpha))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let mut alpha = vec![0; self.dim];
                alpha[j] = 1;
                self.derivative(x, &alpha)
            })
            .collect()
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|j| {
                (0..self.dim)
                    .map(|k| {
                        let mut alpha = vec![0; self.dim];
                        alpha[j] += 1;
                        alpha[k] += 1;
                        self.derivative(x, &alpha)
                    })
                    .collect()
            })
            .collect()
    }

    /// Symbolic partial derivative along axis `j`.
    pub fn partial(&self, j: usize) -> TrigPolynomial {
        let mut out = Self::zero(self.dim);
        for (h, &c) in &self.terms {
            let m = h.freq[j] as f64;
            if m == 0.0 {
                continue;
            }
            match h.phase {
                // d cos(2 pi m.x) = -2 pi m_j sin(2 pi m.x)
                Phase::Cos => out.add_term(h.freq.clone(), Phase::Sin, -TAU * m * c),
                Phase::Sin => out.add_term(h.freq.clone(), Phase::Cos, TAU * m * c),
            }
        }
        out
    }

    /// Pointwise product (product-to-sum identities).
    pub fn product(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out = Self::zero(self.dim);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let sum: Vec<i32> = a.freq.iter().zip(&b.freq).map(|(p, q)| p + q).collect();
                let diff: Vec<i32> = a.freq.iter().zip(&b.freq).map(|(p, q)| p - q).collect();
                let c = 0.5 * ca * cb;
                match (a.phase, b.phase) {
                    (Phase::Cos, Phase::Cos) => {
                        out.add_term(diff, Phase::Cos, c);
                        out.add_term(sum, Phase::Cos, c);
                    }
                    (Phase::Sin, Phase::Sin) => {
                        out.add_term(diff, Phase::Cos, c);
                        out.add_term(sum, Phase::Cos, -c);
                    }
                    (Phase::Sin, Phase::Cos) => {
                        out.add_term(sum, Phase::Sin, c);
                        out.add_term(diff, Phase::Sin, c);
                    }
                    (Phase::Cos, Phase::Sin) => {
                        out.add_term(sum, Phase::Sin, c);
                        out.add_term(diff, Phase::Sin, -c);
                    }
                }
            }
        }
        out
    }
}

/// Vector field on the torus with trigonometric-polynomial components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<TrigPolynomial>,
}

impl VectorField {
    pub fn new(components: Vec<TrigPolynomial>) -> Result<Self> {
        let d = components.len();
        if d == 0 || components.iter().any(|c| c.dim() != d) {
            return Err(Error::Dimension(
                "vector field needs d components, each on the d-torus".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn constant(v: &[f64]) -> Self {
        let d = v.len();
        Self {
            components: v.iter().map(|&c| TrigPolynomial::constant(d, c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[TrigPolynomial] {
        &self.components
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value(x)).collect()
    }

    /// `J[j][k] = d X_j / d x_k`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.gradient(x)).collect()
    }

    pub fn sup_bound(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.sup_bound())
            .fold(0.0, f64::max)
    }

    pub fn max_frequency(&self) -> u32 {
        self.components
            .iter()
            .map(|c| c.max_frequency())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}
