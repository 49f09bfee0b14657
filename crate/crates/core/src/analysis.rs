//! Weak-KAM fits, Hamilton-Jacobi residuals and per-component energy
//! constants on the support of a measure.

use crate::geometry::FourierForm;
use crate::lagrangians::{action, Lagrangian};
use crate::measures::AtomicMeasure;
use crate::numeric::{min_norm_solve, weighted_mean_variance};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Pivot threshold of the least-squares fit, relative to the leading pivot.
const FIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// Exact forms `d omega_b` only.
    Exact,
    /// Constant forms `dx_J` followed by the exact forms.
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakKamFit {
    pub mode: FitMode,
    pub cutoff: u32,
    pub labels: Vec<String>,
    pub basis: Vec<FourierForm>,
    pub coefficients: Vec<f64>,
    /// `sqrt(sum_a w_a |nabla_v L(p_a) - nabla_v omega(p_a)|^2)`.
    pub residual: f64,
    pub rank: usize,
}

impl WeakKamFit {
    /// `omega = sum_b c_b omega_b`.
    pub fn form(&self) -> FourierForm {
        let first = &self.basis[0];
        let mut out = FourierForm::zero(first.dim(), first.degree());
        for (f, c) in self.basis.iter().zip(&self.coefficients) {
            out.add_scaled(f, *c).expect("basis shares dimension and degree");
        }
        out
    }

    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.coefficients[i])
    }
}

/// Weighted least-squares fit of `nabla_v L` by fiber gradients of forms.
pub fn weak_kam_fit(mu: &AtomicMeasure, l: &Lagrangian, k: u32, mode: FitMode) -> Result<WeakKamFit> {
    let (d, n) = (mu.dim(), mu.n());
    let mut named = Vec::new();
    if mode == FitMode::Closed {
        named.extend(FourierForm::constant_basis(d, n));
    }
    named.extend(FourierForm::exact_basis(d, n, k));
    let (labels, basis): (Vec<String>, Vec<FourierForm>) = named.into_iter().unzip();
    let width = n * d;
    let rows = mu.len() * width;
    let mut a = DMatrix::zeros(rows, basis.len());
    let mut y = DVector::zeros(rows);
    for (idx, atom) in mu.atoms().iter().enumerate() {
        let s = atom.weight.max(0.0).sqrt();
        let target = l.fiber_gradient(&atom.point)?.concat();
        for (q, t) in target.iter().enumerate() {
            y[idx * width + q] = s * t;
        }
        for (b, form) in basis.iter().enumerate() {
            for (q, g) in form.fiber_gradient(&atom.point)?.concat().iter().enumerate() {
                a[(idx * width + q, b)] = s * g;
            }
        }
    }
    let (c, rank) = min_norm_solve(&a, &y, FIT_TOL);
    let residual = (&a * &c - &y).norm();
    Ok(WeakKamFit {
        mode,
        cutoff: k,
        labels,
        basis,
        coefficients: c.iter().copied().collect(),
        residual,
        rank,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HjResidual {
    /// `g(v_i, p_i) - L + A_L(mu)` per atom, `p_i` the fitted fiber gradient.
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

pub fn hj_residual(mu: &AtomicMeasure, l: &Lagrangian, omega: &FourierForm, i: usize) -> Result<HjResidual> {
    let a_l = action(l, mu)?;
    let values = mu
        .atoms()
        .iter()
        .map(|atom| {
            let p = omega.fiber_gradient(&atom.point)?;
            let pv: f64 = p[i].iter().zip(atom.point.fiber(i)).map(|(a, b)| a * b).sum();
            Ok(pv - l.value(&atom.point)? + a_l)
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = mu.atoms().iter().map(|a| a.weight).collect();
    let (mean, variance) = weighted_mean_variance(&values, &weights);
    Ok(HjResidual { values, mean, variance })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotConstant {
    pub slot: usize,
    /// Weighted mean of `L - g(v_i, nabla_{v_i} L)`.
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub atoms: Vec<usize>,
    pub weight: f64,
    pub constants: Vec<SlotConstant>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub radius: f64,
    pub components: Vec<Component>,
}

impl ComponentReport {
    pub fn max_variance(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.constants.iter().map(|s| s.variance))
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tau: f64) -> bool {
        self.max_variance() <= tau
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Cluster atoms by single linkage at phase-space distance `radius` and
/// report the energy constant of every component and fiber slot.
pub fn component_constants(mu: &AtomicMeasure, l: &Lagrangian, radius: f64) -> Result<ComponentReport> {
    let atoms = mu.atoms();
    let mut parent: Vec<usize> = (0..atoms.len()).collect();
    for a in 0..atoms.len() {
        for b in a + 1..atoms.len() {
            if atoms[a].point.distance(&atoms[b].point) <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot_of_root = vec![usize::MAX; atoms.len()];
    for a in 0..atoms.len() {
        let r = find(&mut parent, a);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].push(a);
    }
    let components = groups
        .into_iter()
        .map(|members| {
            let weights: Vec<f64> = members.iter().map(|&a| atoms[a].weight).collect();
            let constants = (0..mu.n())
                .map(|slot| {
                    let values = members
                        .iter()
                        .map(|&a| Ok(-l.hamiltonian(slot, &atoms[a].point)?))
                        .collect::<Result<Vec<_>>>()?;
                    let (mean, variance) = weighted_mean_variance(&values, &weights);
                    Ok(SlotConstant { slot, mean, variance })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Component {
                weight: weights.iter().sum(),
                atoms: members,
                constants,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComponentReport { radius, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{corner_measure, line_measure};
    use crate::geometry::PhasePoint;

    #[test]
    fn line_measure_fits_dx1() {
        let mu = line_measure(32, 0.3, 1.0).unwrap();
        let l = Lagrangian::mechanical(2);
        let fit = weak_kam_fit(&mu, &l, 2, FitMode::Closed).unwrap();
        assert!((fit.coefficient("dx1").unwrap() - 1.0).abs() < 1e-10);
        assert!(fit.residual <= 1e-8);
        let others = fit.coefficients.iter().skip(1).fold(0.0_f64, |m, c| m.max(c.abs()));
        assert!(others < 1e-10, "{others}");
        let hj = hj_residual(&mu, &l, &fit.form(), 0).unwrap();
        assert!(hj.variance <= 1e-10);
    }

    #[test]
    fn zero_fiber_dirac() {
        let p = PhasePoint::new(vec![0.2, 0.7], vec![vec![0.0, 0.0]]).unwrap();
        let mu = AtomicMeasure::dirac(p);
        let l = Lagrangian::mechanical(2);
        let fit = weak_kam_fit(&mu, &l, 1, FitMode::Exact).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(fit.residual, 0.0);
        assert_eq!(hj_residual(&mu, &l, &fit.form(), 0).unwrap().values, vec![0.0]);
    }

    #[test]
    fn corner_has_no_exact_fit() {
        let mu = corner_measure(32).unwrap();
        let fit = weak_kam_fit(&mu, &Lagrangian::Length, 3, FitMode::Exact).unwrap();
        assert!(fit.residual > 0.1, "{}", fit.residual);
    }

    #[test]
    fn components_of_two_lines() {
        let l = Lagrangian::mechanical(2);
        let slow = line_measure(32, 0.1, 1.0).unwrap();
        let fast = line_measure(32, 0.6, 2.0).unwrap();
        let both = slow.scaled(0.5).sum(&fast.scaled(0.5)).unwrap();
        let report = component_constants(&both, &l, 0.1).unwrap();
        assert_eq!(report.components.len(), 2);
        let mut means: Vec<f64> = report.components.iter().map(|c| c.constants[0].mean).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 2.0).abs() < 1e-12 && (means[1] + 0.5).abs() < 1e-12);
        assert!(report.passes(1e-12));
        let single = component_constants(&slow, &l, 0.1).unwrap();
        assert_eq!(single.components.len(), 1);
        assert!((single.components[0].constants[0].mean + 0.5).abs() < 1e-12);
    }
}
