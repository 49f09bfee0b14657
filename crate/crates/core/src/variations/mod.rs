//! Explicit one-parameter families of measures and the distributions they
//! differentiate to.

mod battery;

pub use battery::{
    centered, random_generators, random_trig, random_vector_field, test_battery, BatteryConfig, Generator,
};

use crate::distributions::{MildDistribution, MultiIndex, TestFunction};
use crate::geometry::{FourierForm, PhasePoint, VectorField};
use crate::measures::{Atom, AtomicMeasure};
use crate::numeric::{log_log_slope, min_norm_solve, pairwise_sum};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Largest flow step before scaling by `1 / (1 + sup |X|)`.
const FLOW_STEP: f64 = 1e-3;
/// Fraction of the singular interval kept for transpositional families.
const VALIDITY_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// Push-forward by the flow of `X` and its differential.
    Horizontal { field: VectorField },
    /// Fiber shift `v -> v + s u`, per atom.
    Vertical { shifts: Vec<Vec<Vec<f64>>> },
    /// Reweighting by `1 + t sigma` with fiber `slot` divided by `1 + t sigma`.
    Transpositional { sigma: Vec<f64>, slot: usize },
}

/// `t -> mu_t` together with its declared derivative at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationFamily {
    kind: FamilyKind,
    base: AtomicMeasure,
    distribution: MildDistribution,
    validity: (f64, f64),
}

impl VariationFamily {
    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Horizontal { .. } => "horizontal",
            FamilyKind::Vertical { .. } => "vertical",
            FamilyKind::Transpositional { .. } => "transpositional",
        }
    }

    pub fn base(&self) -> &AtomicMeasure {
        &self.base
    }

    pub fn distribution(&self) -> &MildDistribution {
        &self.distribution
    }

    /// Open interval of admissible parameters.
    pub fn validity(&self) -> (f64, f64) {
        self.validity
    }

    pub fn contains(&self, t: f64) -> bool {
        self.validity.0 < t && t < self.validity.1
    }

    /// `mu_t`; `t = 0` returns the base measure unchanged.
    pub fn evaluate(&self, t: f64) -> Result<AtomicMeasure> {
        if !self.contains(t) {
            return Err(Error::OutsideValidity {
                t,
                lower: self.validity.0,
                upper: self.validity.1,
            });
        }
        if t == 0.0 {
            return Ok(self.base.clone());
        }
        match &self.kind {
            FamilyKind::Horizontal { field } => Ok(self.base.map_atoms(|a| {
                let (x, jac) = flow(field, a.point.x(), t);
                let fibers = a.point.fibers().iter().map(|v| mat_vec(&jac, v)).collect();
                Atom::new(PhasePoint::new(x, fibers).expect("shape preserved"), a.weight)
            })),
            FamilyKind::Vertical { shifts } => {
                let atoms = self
                    .base
                    .atoms()
                    .iter()
                    .zip(shifts)
                    .map(|(a, u)| {
                        let fibers = a
                            .point
                            .fibers()
                            .iter()
                            .zip(u)
                            .map(|(v, du)| v.iter().zip(du).map(|(c, dc)| c + t * dc).collect())
                            .collect();
                        Atom::new(a.point.with_fibers(fibers), a.weight)
                    })
                    .collect();
                AtomicMeasure::new(self.base.dim(), self.base.n(), atoms)
            }
            FamilyKind::Transpositional { sigma, slot } => {
                let scaled: Vec<f64> = self
                    .base
                    .atoms()
                    .iter()
                    .zip(sigma)
                    .map(|(a, s)| a.weight * (1.0 + t * s))
                    .collect();
                let total = pairwise_sum(&scaled);
                let atoms = self
                    .base
                    .atoms()
                    .iter()
                    .zip(sigma)
                    .zip(&scaled)
                    .map(|((a, s), w)| {
                        let mut fibers = a.point.fibers().to_vec();
                        fibers[*slot] = fibers[*slot].iter().map(|c| c / (1.0 + t * s)).collect();
                        Atom::new(a.point.with_fibers(fibers), w / total)
                    })
                    .collect();
                AtomicMeasure::new(self.base.dim(), self.base.n(), atoms)
            }
        }
    }
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| (0..k).map(|l| row[l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Classical fourth-order integration of `x' = X(x)` together with the
/// variational equation `J' = DX(x) J`, `J(0) = I`. Returns the wrapped
/// endpoint and `J(t)`.
fn flow(field: &VectorField, x0: &[f64], t: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = x0.len();
    let hmax = FLOW_STEP / (1.0 + field.sup_bound());
    let steps = (t.abs() / hmax).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    let mut jac: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let rhs = |x: &[f64], j: &[Vec<f64>]| (field.value(x), mat_mul(&field.jacobian(x), j));
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let maxpy = |m: &[Vec<f64>], k: &[Vec<f64>], s: f64| -> Vec<Vec<f64>> {
        m.iter().zip(k).map(|(r, kr)| axpy(r, kr, s)).collect()
    };
    for _ in 0..steps {
        let (k1x, k1j) = rhs(&x, &jac);
        let (k2x, k2j) = rhs(&axpy(&x, &k1x, 0.5 * h), &maxpy(&jac, &k1j, 0.5 * h));
        let (k3x, k3j) = rhs(&axpy(&x, &k2x, 0.5 * h), &maxpy(&jac, &k2j, 0.5 * h));
        let (k4x, k4j) = rhs(&axpy(&x, &k3x, h), &maxpy(&jac, &k3j, h));
        for i in 0..d {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            for j in 0..d {
                jac[i][j] += h / 6.0 * (k1j[i][j] + 2.0 * k2j[i][j] + 2.0 * k3j[i][j] + k4j[i][j]);
            }
        }
    }
    (x, jac)
}

/// First-order distribution `f -> int sum_q c_q(p) d_q f dmu` from per-atom
/// coefficient vectors over the flat coordinates.
fn first_order(mu: &AtomicMeasure, coeffs: &[Vec<f64>]) -> Result<MildDistribution> {
    let (d, n) = (mu.dim(), mu.n());
    let len = (n + 1) * d;
    let mut eta = MildDistribution::zero(d, n);
    for q in 0..len {
        let atoms: Vec<Atom> = mu
            .atoms()
            .iter()
            .zip(coeffs)
            .filter(|(a, c)| c[q] != 0.0 && a.weight != 0.0)
            .map(|(a, c)| Atom::new(a.point.clone(), -a.weight * c[q]))
            .collect();
        if !atoms.is_empty() {
            eta.push(MultiIndex::unit(len, q), AtomicMeasure::signed(d, n, atoms)?)?;
        }
    }
    Ok(eta)
}

/// Horizontal variation along the torus field `X`:
/// `<eta, f> = int d_x f(X) + sum_i nabla_{v_i} f . (DX v_i) dmu`,
/// the derivative of the push-forward by the flow and its differential.
pub fn horizontal(mu: &AtomicMeasure, field: &VectorField) -> Result<VariationFamily> {
    if field.dim() != mu.dim() {
        return Err(Error::Dimension("vector field on a different torus".into()));
    }
    let coeffs: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|a| {
            let mut c = field.value(a.point.x());
            let jac = field.jacobian(a.point.x());
            for v in a.point.fibers() {
                c.extend(mat_vec(&jac, v));
            }
            c
        })
        .collect();
    Ok(VariationFamily {
        kind: FamilyKind::Horizontal { field: field.clone() },
        distribution: first_order(mu, &coeffs)?,
        base: mu.clone(),
        validity: (f64::NEG_INFINITY, f64::INFINITY),
    })
}

/// Vertical variation `<eta, f> = int sum_i u_i . nabla_{v_i} f dmu` with
/// per-atom shifts `u` (`n x d` each).
pub fn vertical(mu: &AtomicMeasure, shifts: Vec<Vec<Vec<f64>>>) -> Result<VariationFamily> {
    if shifts.len() != mu.len()
        || shifts
            .iter()
            .any(|u| u.len() != mu.n() || u.iter().any(|r| r.len() != mu.dim()))
    {
        return Err(Error::Dimension("one n x d shift per atom".into()));
    }
    let d = mu.dim();
    let coeffs: Vec<Vec<f64>> = shifts
        .iter()
        .map(|u| {
            let mut c = vec![0.0; d];
            c.extend(u.iter().flatten());
            c
        })
        .collect();
    Ok(VariationFamily {
        kind: FamilyKind::Vertical { shifts },
        distribution: first_order(mu, &coeffs)?,
        base: mu.clone(),
        validity: (f64::NEG_INFINITY, f64::INFINITY),
    })
}

/// Fiber gradients of the forms whose pairings vertical variations must
/// annihilate: the exact basis at cutoff `k`, and in homological mode also
/// the constant forms `dx_J`.
fn constraint_forms(d: usize, n: usize, k: u32, homological: bool) -> Vec<FourierForm> {
    let mut forms: Vec<FourierForm> = FourierForm::exact_basis(d, n, k).into_iter().map(|(_, f)| f).collect();
    if homological {
        forms.extend(FourierForm::constant_basis(d, n).into_iter().map(|(_, f)| f));
    }
    forms
}

/// Remove from `shifts` its `L^2(mu)` projection onto the span of the
/// constraint fiber gradients, so that the vertical distribution passes
/// (Hol) at cutoff `k` (and (Hom) when `homological`).
pub fn project_vertical(
    mu: &AtomicMeasure,
    shifts: &[Vec<Vec<f64>>],
    k: u32,
    homological: bool,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let (d, n) = (mu.dim(), mu.n());
    let forms = constraint_forms(d, n, k, homological);
    if forms.is_empty() {
        return Ok(shifts.to_vec());
    }
    let rows = mu.len() * n * d;
    let mut grads = Vec::with_capacity(forms.len());
    for f in &forms {
        let per_atom: Vec<Vec<f64>> = mu
            .atoms()
            .iter()
            .map(|a| f.fiber_gradient(&a.point).map(|g| g.concat()))
            .collect::<Result<_>>()?;
        grads.push(per_atom);
    }
    let sqrt_w: Vec<f64> = mu.atoms().iter().map(|a| a.weight.max(0.0).sqrt()).collect();
    let a = DMatrix::from_fn(rows, forms.len(), |r, b| {
        let (atom, q) = (r / (n * d), r % (n * d));
        sqrt_w[atom] * grads[b][atom][q]
    });
    let y = DVector::from_fn(rows, |r, _| {
        let (atom, q) = (r / (n * d), r % (n * d));
        sqrt_w[atom] * shifts[atom][q / d][q % d]
    });
    let (c, _) = min_norm_solve(&a, &y, 1e-10);
    Ok(shifts
        .iter()
        .enumerate()
        .map(|(atom, u)| {
            u.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &val)| {
                            let fitted: f64 = (0..forms.len()).map(|b| c[b] * grads[b][atom][i * d + j]).sum();
                            val - fitted
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// Transpositional variation with `sigma` sampled from a test function.
pub fn transpositional(mu: &AtomicMeasure, sigma: &dyn TestFunction, slot: usize) -> Result<VariationFamily> {
    let values = mu
        .atoms()
        .iter()
        .map(|a| sigma.value(&a.point))
        .collect::<Result<Vec<_>>>()?;
    transpositional_values(mu, values, slot)
}

/// Transpositional variation
/// `<eta, f> = int sigma f - int sigma g(v_i, nabla_{v_i} f) - int f int sigma`
/// with per-atom `sigma`. The family reweights by `1 + t sigma`,
/// renormalizes, and divides fiber `slot` by `1 + t sigma`.
pub fn transpositional_values(mu: &AtomicMeasure, sigma: Vec<f64>, slot: usize) -> Result<VariationFamily> {
    if sigma.len() != mu.len() {
        return Err(Error::Dimension("one sigma value per atom".into()));
    }
    if slot >= mu.n() {
        return Err(Error::InvalidInput(format!("fiber slot {slot} out of range")));
    }
    if !mu.is_probability() {
        return Err(Error::InvalidInput("transpositional variations need a probability measure".into()));
    }
    let (d, n) = (mu.dim(), mu.n());
    let mass: Vec<f64> = mu.atoms().iter().zip(&sigma).map(|(a, s)| a.weight * s).collect();
    let mean = pairwise_sum(&mass);
    let mut eta = MildDistribution::zero(d, n);
    let order_zero: Vec<Atom> = mu
        .atoms()
        .iter()
        .zip(&sigma)
        .map(|(a, s)| Atom::new(a.point.clone(), a.weight * (s - mean)))
        .filter(|a| a.weight != 0.0)
        .collect();
    if !order_zero.is_empty() {
        eta.push(MultiIndex::zero((n + 1) * d), AtomicMeasure::signed(d, n, order_zero)?)?;
    }
    let coeffs: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .zip(&sigma)
        .map(|(a, s)| {
            let mut c = vec![0.0; (n + 1) * d];
            for (j, vj) in a.point.fiber(slot).iter().enumerate() {
                c[d + slot * d + j] = -s * vj;
            }
            c
        })
        .collect();
    eta = eta.sum(&first_order(mu, &coeffs)?)?;
    let pos = sigma.iter().cloned().fold(0.0, f64::max);
    let neg = sigma.iter().map(|s| -s).fold(0.0, f64::max);
    let lower = if pos > 0.0 { -VALIDITY_MARGIN / pos } else { f64::NEG_INFINITY };
    let upper = if neg > 0.0 { VALIDITY_MARGIN / neg } else { f64::INFINITY };
    Ok(VariationFamily {
        kind: FamilyKind::Transpositional { sigma, slot },
        distribution: eta,
        base: mu.clone(),
        validity: (lower, upper),
    })
}

/// `sum_k -d_{w_k} delta_{p_k}`: first-order fiber derivatives of point
/// masses, with `w_k` an `n x d` direction.
pub fn point_variation(items: &[(PhasePoint, Vec<Vec<f64>>)]) -> Result<MildDistribution> {
    let first = items
        .first()
        .ok_or_else(|| Error::InvalidInput("point variation needs at least one atom".into()))?;
    let (d, n) = (first.0.dim(), first.0.n());
    let len = (n + 1) * d;
    let mut per_coord: Vec<Vec<Atom>> = vec![Vec::new(); len];
    for (p, w) in items {
        if p.dim() != d || p.n() != n || w.len() != n || w.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("point variation entries must share T^nM".into()));
        }
        for (i, row) in w.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    per_coord[d + i * d + j].push(Atom::new(p.clone(), -c));
                }
            }
        }
    }
    let mut eta = MildDistribution::zero(d, n);
    for (q, atoms) in per_coord.into_iter().enumerate() {
        if !atoms.is_empty() {
            eta.push(MultiIndex::unit(len, q), AtomicMeasure::signed(d, n, atoms)?)?;
        }
    }
    Ok(eta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub estimate: f64,
    pub error: f64,
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub pairing: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `log error` against `log t` over rows above the floor.
    pub order: Option<f64>,
    /// Errors below this count as rounding.
    pub floor: f64,
    /// Every error is at the floor (the family is affine in `t` for `f`).
    pub exact: bool,
    pub one_sided: bool,
}

impl ConvergenceReport {
    pub fn required_order(&self) -> f64 {
        if self.one_sided {
            0.9
        } else {
            1.9
        }
    }

    pub fn passes(&self) -> bool {
        if self.exact {
            return true;
        }
        match self.order {
            Some(order) => order >= self.required_order(),
            // errors above the floor at large t only, rounding below
            None => self.rows.last().is_some_and(|r| r.error <= self.floor),
        }
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error).fold(0.0, f64::max)
    }
}

/// Finite-difference check of `d/dt int f dmu_t = <eta, f>`.
pub fn derivative_check(fam: &VariationFamily, f: &dyn TestFunction, steps: &[f64]) -> Result<ConvergenceReport> {
    let cache = FamilyCache::new(fam, steps)?;
    cache.check(f)
}

/// [`derivative_check`] over a battery, evaluating each `mu_t` once.
pub fn derivative_check_battery(
    fam: &VariationFamily,
    battery: &[&dyn TestFunction],
    steps: &[f64],
) -> Result<Vec<ConvergenceReport>> {
    let cache = FamilyCache::new(fam, steps)?;
    battery.iter().map(|f| cache.check(*f)).collect()
}

struct FamilyCache<'a> {
    fam: &'a VariationFamily,
    base: AtomicMeasure,
    samples: Vec<(f64, AtomicMeasure, Option<AtomicMeasure>)>,
}

impl<'a> FamilyCache<'a> {
    fn new(fam: &'a VariationFamily, steps: &[f64]) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("derivative check needs positive steps".into()));
        }
        let mut samples = Vec::with_capacity(steps.len());
        for &t in steps {
            let plus = fam.evaluate(t)?;
            let minus = if fam.contains(-t) { Some(fam.evaluate(-t)?) } else { None };
            samples.push((t, plus, minus));
        }
        Ok(Self {
            fam,
            base: fam.evaluate(0.0)?,
            samples,
        })
    }

    fn check(&self, f: &dyn TestFunction) -> Result<ConvergenceReport> {
        let pairing = self.fam.distribution().pair(f)?;
        let i0 = self.base.try_integrate(|p| f.value(p))?;
        let scale = 1.0 + pairing.abs() + self.base.try_integrate(|p| f.value(p).map(f64::abs))?;
        let floor = 1e-10 * scale;
        let mut rows = Vec::with_capacity(self.samples.len());
        for (t, plus, minus) in &self.samples {
            let ip = plus.try_integrate(|p| f.value(p))?;
            let (estimate, one_sided) = match minus {
                Some(m) => ((ip - m.try_integrate(|p| f.value(p))?) / (2.0 * t), false),
                None => ((ip - i0) / t, true),
            };
            rows.push(ConvergenceRow {
                t: *t,
                estimate,
                error: (estimate - pairing).abs(),
                one_sided,
            });
        }
        let exact = rows.iter().all(|r| r.error <= floor);
        let usable: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.error > floor).collect();
        let order = if exact || usable.len() < 2 {
            None
        } else {
            let ts: Vec<f64> = usable.iter().map(|r| r.t).collect();
            let es: Vec<f64> = usable.iter().map(|r| r.error).collect();
            log_log_slope(&ts, &es)
        };
        let one_sided = rows.iter().any(|r| r.one_sided);
        Ok(ConvergenceReport {
            label: f.label(),
            pairing,
            rows,
            order,
            floor,
            exact,
            one_sided,
        })
    }
}
