//! Action minimization over discretized holonomic measures, criticality
//! scans and Euler-Lagrange residuals.

mod simplex;

use crate::distributions::{check_hol, check_hom, check_prob, MildDistribution};
use crate::geometry::{FourierForm, PhasePoint};
use crate::lagrangians::Lagrangian;
use crate::measures::{holonomy_residual, homology_class, Atom, AtomicMeasure, Cell};
use crate::variations::Generator;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityPreset {
    /// `+-e_j`.
    Axes,
    /// On the 2-torus: `(+-1, 0)`, `(0, +-1)`, `(+-1, +-1)`, `(+-2, +-1)`, `(+-1, +-2)`.
    Lattice16,
}

impl VelocityPreset {
    pub fn velocities(self, d: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            VelocityPreset::Axes => Ok((0..d)
                .flat_map(|j| {
                    [1.0, -1.0].map(|s| {
                        let mut v = vec![0.0; d];
                        v[j] = s;
                        v
                    })
                })
                .collect()),
            VelocityPreset::Lattice16 => {
                if d != 2 {
                    return Err(Error::Dimension("lattice16 is a 2-torus velocity set".into()));
                }
                let mut out = Vec::with_capacity(16);
                for (a, b) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (2.0, 1.0), (2.0, -1.0), (1.0, 2.0), (1.0, -2.0)] {
                    out.push(vec![a, b]);
                    out.push(vec![-a, -b]);
                }
                Ok(out)
            }
        }
    }
}

/// Product grid: `samples^d` base points `k / samples` times a finite set of
/// fiber tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub samples: usize,
    /// Each entry is one `n x d` fiber tuple.
    pub velocities: Vec<Vec<Vec<f64>>>,
}

impl GridSpec {
    /// Curve grid (`n = 1`) with a preset velocity set.
    pub fn preset(d: usize, samples: usize, preset: VelocityPreset) -> Result<Self> {
        Ok(Self {
            d,
            samples,
            velocities: preset.velocities(d)?.into_iter().map(|v| vec![v]).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.velocities.first().map_or(0, |v| v.len())
    }

    /// Closed under `v -> -v`, so that pairing opposite velocities gives a
    /// feasible holonomic measure.
    pub fn is_symmetric(&self) -> bool {
        self.velocities.iter().all(|v| {
            let neg: Vec<Vec<f64>> = v.iter().map(|f| f.iter().map(|c| -c).collect()).collect();
            self.velocities.contains(&neg)
        })
    }

    pub fn points(&self) -> Result<Vec<PhasePoint>> {
        if self.samples == 0 || self.velocities.is_empty() {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        let total = self.samples.pow(self.d as u32);
        let mut out = Vec::with_capacity(total * self.velocities.len());
        for idx in 0..total {
            let mut rem = idx;
            let mut x = vec![0.0; self.d];
            for c in x.iter_mut().rev() {
                *c = (rem % self.samples) as f64 / self.samples as f64;
                rem /= self.samples;
            }
            for v in &self.velocities {
                out.push(PhasePoint::new(x.clone(), v.clone())?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub target: f64,
}

/// One weight per grid point; equality rows for probability, holonomy and
/// optionally homology.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureLP {
    pub d: usize,
    pub n: usize,
    pub cutoff: u32,
    pub grid: Vec<PhasePoint>,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub homology: Option<Vec<f64>>,
}

/// Build the LP for `min int L dmu` over probability measures on the grid
/// annihilating every exact form of cutoff `k`, optionally with
/// `int dx_J dmu = rho_J`.
pub fn assemble(spec: &GridSpec, l: &Lagrangian, k: u32, homology: Option<&[f64]>) -> Result<MeasureLP> {
    let grid = spec.points()?;
    let (d, n) = (spec.d, spec.n());
    let objective = grid.iter().map(|p| l.value(p)).collect::<Result<Vec<_>>>()?;
    let mut rows = vec![LpRow {
        label: "probability".into(),
        coeffs: vec![1.0; grid.len()],
        target: 1.0,
    }];
    let eval_row = |form: &FourierForm| grid.iter().map(|p| form.eval(p)).collect::<Result<Vec<_>>>();
    for (label, form) in FourierForm::exact_basis(d, n, k) {
        rows.push(LpRow {
            label,
            coeffs: eval_row(&form)?,
            target: 0.0,
        });
    }
    if let Some(rho) = homology {
        let forms = FourierForm::constant_basis(d, n);
        if rho.len() != forms.len() {
            return Err(Error::Dimension(format!(
                "homology target needs {} entries, got {}",
                forms.len(),
                rho.len()
            )));
        }
        for ((label, form), &target) in forms.iter().zip(rho) {
            rows.push(LpRow {
                label: label.clone(),
                coeffs: eval_row(form)?,
                target,
            });
        }
    }
    Ok(MeasureLP {
        d,
        n,
        cutoff: k,
        grid,
        objective,
        rows,
        homology: homology.map(<[f64]>::to_vec),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub measure: AtomicMeasure,
    pub objective: f64,
    pub iterations: usize,
    pub redundant_rows: Vec<String>,
    /// Re-verified on the output measure, independently of the solver.
    pub holonomy_residual: f64,
    pub probability_residual: f64,
    pub homology_residual: Option<f64>,
}

impl MeasureLP {
    pub fn variables(&self) -> usize {
        self.grid.len()
    }

    /// Plain-text tableau: objective row, then one line per constraint with
    /// its target after `=`.
    pub fn tableau(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("# variables {} rows {}\nobjective: {}\n", self.variables(), self.rows.len(), join(&self.objective));
        for row in &self.rows {
            let _ = writeln!(out, "{}: {} = {:e}", row.label, join(&row.coeffs), row.target);
        }
        out
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let a: Vec<Vec<f64>> = self.rows.iter().map(|r| r.coeffs.clone()).collect();
        let b: Vec<f64> = self.rows.iter().map(|r| r.target).collect();
        let result = simplex::solve(&a, &b, &self.objective)?;
        let atoms: Vec<Atom> = self
            .grid
            .iter()
            .zip(&result.x)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| Atom::new(p.clone(), w))
            .collect();
        let measure = AtomicMeasure::new(self.d, self.n, atoms)?;
        let holonomy = holonomy_residual(&measure, self.cutoff)
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));
        let homology = self.homology.as_ref().map(|rho| {
            homology_class(&measure)
                .iter()
                .zip(rho)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        });
        Ok(LpSolution {
            probability_residual: (measure.total_weight() - 1.0).abs(),
            measure,
            objective: result.objective,
            iterations: result.iterations,
            redundant_rows: result.redundant.iter().map(|&r| self.rows[r].label.clone()).collect(),
            holonomy_residual: holonomy,
            homology_residual: homology,
        })
    }
}

/// Tangency pre-checks applied to every generator before it is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyChecks {
    pub cutoff: u32,
    pub tol: f64,
    pub homological: bool,
}

impl Default for TangencyChecks {
    fn default() -> Self {
        Self {
            cutoff: 1,
            tol: 1e-6,
            homological: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGenerator {
    pub label: String,
    pub eta: MildDistribution,
    pub two_sided: bool,
}

impl From<&Generator> for ScanGenerator {
    fn from(g: &Generator) -> Self {
        Self {
            label: g.label.clone(),
            eta: g.family.distribution().clone(),
            two_sided: g.two_sided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorValue {
    pub label: String,
    pub value: f64,
    pub two_sided: bool,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedGenerator {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub critical: bool,
    pub tau: f64,
    pub values: Vec<GeneratorValue>,
    pub excluded: Vec<ExcludedGenerator>,
    /// Index into `values` of the worst violation.
    pub witness: Option<usize>,
}

impl CriticalityReport {
    pub fn witness(&self) -> Option<&GeneratorValue> {
        self.witness.map(|i| &self.values[i])
    }
}

fn tangency_failure(eta: &MildDistribution, checks: &TangencyChecks) -> Result<Option<String>> {
    let prob = check_prob(eta, checks.tol);
    if !prob.pass {
        return Ok(Some(format!("prob residual {:e}", prob.max_abs)));
    }
    let hol = check_hol(eta, checks.cutoff, checks.tol)?;
    if !hol.pass {
        return Ok(Some(format!("hol residual {:e}", hol.max_abs)));
    }
    if checks.homological {
        let hom = check_hom(eta, checks.cutoff, checks.tol)?;
        if !hom.pass {
            return Ok(Some(format!("hom residual {:e}", hom.max_abs)));
        }
    }
    Ok(None)
}

/// Pair `L` with every tangent generator. Two-sided generators violate
/// criticality when `|<eta, L>| > tau`, one-sided ones when `<eta, L> < -tau`.
/// Generators failing the tangency pre-checks are excluded and listed.
pub fn criticality_scan(
    mu: &AtomicMeasure,
    l: &Lagrangian,
    generators: &[ScanGenerator],
    tau: f64,
    checks: &TangencyChecks,
) -> Result<CriticalityReport> {
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for g in generators {
        if g.eta.dim() != mu.dim() || g.eta.n() != mu.n() {
            excluded.push(ExcludedGenerator {
                label: g.label.clone(),
                reason: "lives on a different phase space".into(),
            });
            continue;
        }
        if let Some(reason) = tangency_failure(&g.eta, checks)? {
            excluded.push(ExcludedGenerator {
                label: g.label.clone(),
                reason,
            });
            continue;
        }
        let value = g.eta.pair(l)?;
        let violation = if g.two_sided { value.abs() > tau } else { value < -tau };
        values.push(GeneratorValue {
            label: g.label.clone(),
            value,
            two_sided: g.two_sided,
            violation,
        });
    }
    let witness = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.violation)
        .max_by(|(_, a), (_, b)| a.value.abs().total_cmp(&b.value.abs()))
        .map(|(i, _)| i);
    Ok(CriticalityReport {
        critical: witness.is_none(),
        tau,
        values,
        excluded,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElResidual {
    /// One `d`-vector per cell sample.
    pub field: Vec<Vec<f64>>,
    pub sup: f64,
}

/// `dL/dx - sum_i d/dt_i (dL/dv_i)` along a sampled cell, with the
/// parameter derivatives taken by finite differences on the sample grid.
pub fn el_residual(cell: &Cell, l: &Lagrangian) -> Result<ElResidual> {
    let (d, n) = (cell.dim(), cell.n());
    let atoms = cell.atoms()?;
    let second = cell.second_derivatives()?;
    let mut field = Vec::with_capacity(atoms.len());
    for (atom, x2) in atoms.iter().zip(&second) {
        let p = &atom.point;
        let grad = l.base_gradient(p)?;
        let mixed = l.mixed_hessian(p)?;
        let hess = l.fiber_hessian(p)?;
        let mut r = grad;
        for (lx, rl) in r.iter_mut().enumerate() {
            for i in 0..n {
                let row = i * d + lx;
                let mut dt = 0.0;
                for k in 0..d {
                    dt += mixed[row][k] * p.fiber(i)[k];
                }
                for j in 0..n {
                    for k in 0..d {
                        dt += hess[row][j * d + k] * x2[i][j][k];
                    }
                }
                *rl -= dt;
            }
        }
        field.push(r);
    }
    let sup = field
        .iter()
        .map(|r| r.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(ElResidual { field, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{corner_distribution, corner_measure};
    use crate::geometry::{Phase, TrigPolynomial};
    use std::f64::consts::TAU;

    #[test]
    fn row_counts() {
        let spec = GridSpec::preset(2, 8, VelocityPreset::Axes).unwrap();
        let l = Lagrangian::mechanical(2);
        let lp = assemble(&spec, &l, 1, None).unwrap();
        assert_eq!(lp.variables(), 256);
        assert_eq!(lp.rows.len(), 9);
        assert_eq!(assemble(&spec, &l, 0, None).unwrap().rows.len(), 1);
        assert_eq!(assemble(&spec, &l, 1, Some(&[1.0, 0.0])).unwrap().rows.len(), 11);
        assert!(spec.is_symmetric());
        assert!(lp.tableau().lines().count() == 11);
    }

    #[test]
    fn one_dimensional_homological_optimum() {
        let spec = GridSpec::preset(1, 8, VelocityPreset::Axes).unwrap();
        let l = Lagrangian::mechanical(1);
        let sol = assemble(&spec, &l, 2, Some(&[1.0])).unwrap().solve().unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-10);
        assert!(sol.measure.atoms().iter().all(|a| a.point.fiber(0)[0] == 1.0));
        let zero = assemble(&spec, &l, 2, Some(&[0.0])).unwrap().solve().unwrap();
        assert!((zero.objective - 0.5).abs() < 1e-10);
    }

    #[test]
    fn constant_objective_gives_one() {
        let spec = GridSpec::preset(2, 4, VelocityPreset::Axes).unwrap();
        let mut lp = assemble(&spec, &Lagrangian::mechanical(2), 1, None).unwrap();
        lp.objective = vec![1.0; lp.variables()];
        assert!((lp.solve().unwrap().objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimum_nonincreasing_as_cutoff_drops() {
        let spec = GridSpec::preset(2, 6, VelocityPreset::Lattice16).unwrap();
        let mut potential = TrigPolynomial::zero(2);
        potential.add_term(vec![1, 0], Phase::Cos, 0.3);
        potential.add_term(vec![0, 1], Phase::Sin, 0.2);
        let l = Lagrangian::Mechanical { potential };
        let values: Vec<f64> = (0..=3)
            .map(|k| assemble(&spec, &l, k, Some(&[0.5, 0.0])).unwrap().solve().unwrap().objective)
            .collect();
        for w in values.windows(2) {
            assert!(w[0] <= w[1] + 1e-10, "{values:?}");
        }
    }

    #[test]
    fn corner_is_not_critical_for_length() {
        let mu = corner_measure(32).unwrap();
        let g = ScanGenerator {
            label: "corner".into(),
            eta: corner_distribution(),
            two_sided: false,
        };
        let zero = ScanGenerator {
            label: "zero".into(),
            eta: MildDistribution::zero(2, 1),
            two_sided: true,
        };
        let report = criticality_scan(&mu, &Lagrangian::Length, &[g, zero], 1e-6, &TangencyChecks::default()).unwrap();
        assert!(!report.critical);
        assert_eq!(report.witness().unwrap().value, -2.0);
        assert_eq!(report.values[1].value, 0.0);
        assert!(!report.values[1].violation);
    }

    fn curve(samples: usize, gamma: impl Fn(f64) -> Vec<f64>) -> Cell {
        Cell::sample(2, vec![samples], vec![true], 1.0, |t| gamma(t[0])).unwrap()
    }

    #[test]
    fn euler_lagrange_examples() {
        let line = curve(64, |t| vec![t, 0.3]);
        assert!(el_residual(&line, &Lagrangian::mechanical(2)).unwrap().sup <= 1e-8);
        let a = 0.1;
        let wave = curve(256, |t| vec![t, a * (TAU * t).sin()]);
        let sup = el_residual(&wave, &Lagrangian::mechanical(2)).unwrap().sup;
        assert!((sup / (a * TAU * TAU) - 1.0).abs() < 0.02, "{sup}");
        let eps = 0.05;
        let mut potential = TrigPolynomial::zero(2);
        potential.add_term(vec![1, 0], Phase::Cos, eps);
        let sup = el_residual(&line, &Lagrangian::Mechanical { potential }).unwrap().sup;
        assert!((sup / (TAU * eps) - 1.0).abs() < 0.01, "{sup}");
    }
}
