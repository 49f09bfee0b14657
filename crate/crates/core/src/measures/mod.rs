//! Atomic measures on `T^nM` and the quantities attached to them.

mod chain;
mod metric;

pub use chain::{measure_from_chain, Cell, CellChain};
pub use metric::{mild_distance, MetricCatalog, METRIC_VERSION};

use crate::geometry::{vol_n, FourierForm, PhasePoint};
use crate::numeric::pairwise_sum;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on `|total_weight - 1|` for a measure to count as a probability.
pub const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: PhasePoint,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: PhasePoint, weight: f64) -> Self {
        Self { point, weight }
    }
}

/// Finite weighted cloud of phase points, all in the same `T^nM`.
///
/// Weights are nonnegative unless the measure was built with
/// [`AtomicMeasure::signed`]; signed clouds appear as the bases of
/// distribution terms and as smoothing output.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    d: usize,
    n: usize,
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct AtomJson {
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeasureJson {
    n: usize,
    d: usize,
    atoms: Vec<AtomJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric_version: Option<u32>,
}

impl AtomJson {
    pub(crate) fn from_atom(a: &Atom) -> Self {
        Self {
            x: a.point.x().to_vec(),
            v: a.point.fibers().to_vec(),
            w: a.weight,
        }
    }

    pub(crate) fn into_atom(self) -> Result<Atom> {
        Ok(Atom::new(PhasePoint::new(self.x, self.v)?, self.w))
    }
}

impl AtomicMeasure {
    /// Nonnegative measure; rejects negative or non-finite weights.
    pub fn new(d: usize, n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if let Some((i, a)) = atoms
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.weight >= 0.0) || !a.weight.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "atom {i} has weight {} (measures need nonnegative weights)",
                a.weight
            )));
        }
        Self::signed(d, n, atoms)
    }

    /// Measure with arbitrary real weights.
    pub fn signed(d: usize, n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if d == 0 || n == 0 || n > d {
            return Err(Error::Dimension(format!("need 1 <= n <= d, got n={n}, d={d}")));
        }
        if let Some(a) = atoms.iter().find(|a| a.point.dim() != d || a.point.n() != n) {
            return Err(Error::Dimension(format!(
                "atom in T^{}M over a {}-torus, expected T^{n}M over a {d}-torus",
                a.point.n(),
                a.point.dim()
            )));
        }
        if atoms.iter().any(|a| !a.weight.is_finite()) {
            return Err(Error::InvalidInput("non-finite atom weight".into()));
        }
        Ok(Self { d, n, atoms })
    }

    pub fn empty(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            atoms: Vec::new(),
        }
    }

    /// Unit point mass at `p`.
    pub fn dirac(p: PhasePoint) -> Self {
        Self {
            d: p.dim(),
            n: p.n(),
            atoms: vec![Atom::new(p, 1.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.weight >= 0.0)
    }

    pub fn total_weight(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        pairwise_sum(&w)
    }

    pub fn is_probability(&self) -> bool {
        self.is_nonnegative() && (self.total_weight() - 1.0).abs() <= PROBABILITY_TOL
    }

    /// `sum_a w_a f(p_a)`, summed pairwise.
    pub fn integrate<F: Fn(&PhasePoint) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.atoms.iter().map(|a| a.weight * f(&a.point)).collect();
        pairwise_sum(&terms)
    }

    /// Same as [`integrate`](Self::integrate) for fallible integrands.
    pub fn try_integrate<F: Fn(&PhasePoint) -> Result<f64>>(&self, f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            terms.push(a.weight * f(&a.point)?);
        }
        Ok(pairwise_sum(&terms))
    }

    /// `M(mu) = integral of vol_n`.
    pub fn mass(&self) -> f64 {
        self.integrate(vol_n)
    }

    pub fn scaled(&self, s: f64) -> AtomicMeasure {
        AtomicMeasure {
            d: self.d,
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.point.clone(), s * a.weight))
                .collect(),
        }
    }

    /// Concatenation of atom lists (the sum of the two measures).
    pub fn sum(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        if self.d != other.d || self.n != other.n {
            return Err(Error::Dimension("adding measures on different phase spaces".into()));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Ok(AtomicMeasure {
            d: self.d,
            n: self.n,
            atoms,
        })
    }

    /// Rescale to unit total weight.
    pub fn normalized(&self) -> Result<AtomicMeasure> {
        let total = self.total_weight();
        if total <= 0.0 {
            return Err(Error::InvalidInput("cannot normalize a measure of nonpositive weight".into()));
        }
        Ok(self.scaled(1.0 / total))
    }

    /// Drop atoms whose weight is at most `threshold` in absolute value.
    pub fn pruned(&self, threshold: f64) -> AtomicMeasure {
        AtomicMeasure {
            d: self.d,
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .filter(|a| a.weight.abs() > threshold)
                .cloned()
                .collect(),
        }
    }

    pub fn map_atoms<F: Fn(&Atom) -> Atom>(&self, f: F) -> AtomicMeasure {
        AtomicMeasure {
            d: self.d,
            n: self.n,
            atoms: self.atoms.iter().map(f).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MeasureJson {
            n: self.n,
            d: self.d,
            atoms: self.atoms.iter().map(AtomJson::from_atom).collect(),
            metric_version: Some(METRIC_VERSION),
        })
        .expect("measure serializes")
    }

    /// Parse the JSON format; weights must be nonnegative.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let m = Self::from_json_signed(value)?;
        Self::new(m.d, m.n, m.atoms)
    }

    pub fn from_json_signed(value: &serde_json::Value) -> Result<Self> {
        let raw: MeasureJson = serde_json::from_value(value.clone())?;
        if let Some(v) = raw.metric_version {
            if v != METRIC_VERSION {
                return Err(Error::InvalidInput(format!(
                    "metric catalog version {v} is not supported (expected {METRIC_VERSION})"
                )));
            }
        }
        let atoms = raw
            .atoms
            .into_iter()
            .map(AtomJson::into_atom)
            .collect::<Result<Vec<_>>>()?;
        Self::signed(raw.d, raw.n, atoms)
    }

    /// One row per atom: `x_1..x_d, v_11..v_nd, w`.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = (1..=self.d).map(|j| format!("x_{j}")).collect();
        for i in 1..=self.n {
            header.extend((1..=self.d).map(|j| format!("v_{i}{j}")));
        }
        header.push("w".into());
        let mut out = header.join(",");
        out.push('\n');
        for a in &self.atoms {
            let mut row: Vec<String> = a.point.x().iter().map(|c| c.to_string()).collect();
            for v in a.point.fibers() {
                row.extend(v.iter().map(|c| c.to_string()));
            }
            row.push(a.weight.to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Pairings `int d omega_b d mu` over the exact `n`-forms of the
/// degree-`(n-1)` basis with cutoff `k`, in basis order.
pub fn holonomy_residual(mu: &AtomicMeasure, k: u32) -> Vec<f64> {
    FourierForm::exact_basis(mu.dim(), mu.n(), k)
        .iter()
        .map(|(_, form)| mu.integrate(|p| form.eval(p).expect("degree matches")))
        .collect()
}

/// Probability check plus `max |holonomy residual| <= tol`.
pub fn is_holonomic(mu: &AtomicMeasure, k: u32, tol: f64) -> bool {
    mu.is_probability() && holonomy_residual(mu, k).iter().all(|r| r.abs() <= tol)
}

/// `rho_J(mu) = int dx_J d mu` for every axis subset `J` of size `n`.
pub fn homology_class(mu: &AtomicMeasure) -> Vec<f64> {
    FourierForm::constant_basis(mu.dim(), mu.n())
        .iter()
        .map(|(_, form)| mu.integrate(|p| form.eval(p).expect("degree matches")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(x: &[f64], v: &[&[f64]]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), v.iter().map(|f| f.to_vec()).collect()).unwrap()
    }

    #[test]
    fn integrate_and_mass() {
        let mu = AtomicMeasure::dirac(pp(&[0.2, 0.3], &[&[1.0, 0.0], &[0.0, 1.0]]));
        assert_eq!(mu.integrate(|_| 1.0), 1.0);
        assert_eq!(mu.mass(), 1.0);
        let degenerate = AtomicMeasure::dirac(pp(&[0.2, 0.3], &[&[1.0, 2.0], &[2.0, 4.0]]));
        assert_eq!(degenerate.mass(), 0.0);
        assert_eq!(AtomicMeasure::empty(2, 1).integrate(|_| 1.0), 0.0);
    }

    #[test]
    fn rejects_negative_weights_unless_signed() {
        let atoms = vec![Atom::new(pp(&[0.0], &[&[1.0]]), -0.5)];
        assert!(AtomicMeasure::new(1, 1, atoms.clone()).is_err());
        assert!(AtomicMeasure::signed(1, 1, atoms).is_ok());
    }

    #[test]
    fn zero_fibers_have_no_holonomy_or_homology() {
        let atoms = (0..5)
            .map(|k| Atom::new(pp(&[k as f64 * 0.17, 0.4], &[&[0.0, 0.0]]), 0.2))
            .collect();
        let mu = AtomicMeasure::new(2, 1, atoms).unwrap();
        assert!(holonomy_residual(&mu, 3).iter().all(|r| *r == 0.0));
        assert_eq!(homology_class(&mu), vec![0.0, 0.0]);
    }

    #[test]
    fn json_and_csv() {
        let mu = AtomicMeasure::new(
            2,
            1,
            vec![
                Atom::new(pp(&[0.25, 0.5], &[&[1.0, -2.0]]), 0.75),
                Atom::new(pp(&[0.0, 0.125], &[&[0.5, 0.0]]), 0.25),
            ],
        )
        .unwrap();
        let back = AtomicMeasure::from_json(&mu.to_json()).unwrap();
        assert_eq!(back, mu);
        let csv = mu.to_csv();
        assert!(csv.starts_with("x_1,x_2,v_11,v_12,w\n0.25,0.5,1,-2,0.75\n"));
    }
}
