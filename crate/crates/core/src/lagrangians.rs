//! Built-in Lagrangians on `T^nM` with analytic derivatives.

use crate::distributions::{fd_derivative, MultiIndex, TestFunction};
use crate::geometry::{fiber_volume, PhasePoint, TrigPolynomial, TrigTerm};
use crate::measures::AtomicMeasure;
use crate::numeric::pairwise_sum;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative threshold below which a fiber tuple counts as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Lagrangian {
    /// `|v|`, for curves.
    Length,
    /// `sum_i |v_i|^2 / 2 + V(x)`.
    Mechanical { potential: TrigPolynomial },
    /// `sum_i |v_i|^2 / 2`.
    Dirichlet,
    /// `vol_n(v_1, ..., v_n)`.
    Volume,
    /// `vol_2(v_1, beta v_2) + V(x)`.
    Sock { beta: f64, potential: TrigPolynomial },
}

/// Config form: `{name = "mechanical", potential = [{freq, phase, coeff}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum LagrangianSpec {
    Length,
    Mechanical {
        #[serde(default)]
        potential: Vec<TrigTerm>,
    },
    Dirichlet,
    Volume,
    Sock {
        beta: f64,
        #[serde(default)]
        potential: Vec<TrigTerm>,
    },
}

impl LagrangianSpec {
    pub fn build(&self, d: usize) -> Result<Lagrangian> {
        Ok(match self {
            LagrangianSpec::Length => Lagrangian::Length,
            LagrangianSpec::Mechanical { potential } => Lagrangian::Mechanical {
                potential: TrigPolynomial::from_terms(d, potential)?,
            },
            LagrangianSpec::Dirichlet => Lagrangian::Dirichlet,
            LagrangianSpec::Volume => Lagrangian::Volume,
            LagrangianSpec::Sock { beta, potential } => Lagrangian::Sock {
                beta: *beta,
                potential: TrigPolynomial::from_terms(d, potential)?,
            },
        })
    }
}

fn flat(v: &[Vec<f64>]) -> Vec<f64> {
    v.concat()
}

impl Lagrangian {
    pub fn mechanical(d: usize) -> Self {
        Lagrangian::Mechanical {
            potential: TrigPolynomial::zero(d),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Lagrangian::Length => "length",
            Lagrangian::Mechanical { .. } => "mechanical",
            Lagrangian::Dirichlet => "dirichlet",
            Lagrangian::Volume => "volume",
            Lagrangian::Sock { .. } => "sock",
        }
    }

    fn potential(&self) -> Option<&TrigPolynomial> {
        match self {
            Lagrangian::Mechanical { potential } | Lagrangian::Sock { potential, .. } => Some(potential),
            _ => None,
        }
    }

    fn check(&self, p: &PhasePoint) -> Result<()> {
        let needed = match self {
            Lagrangian::Length => Some(1),
            Lagrangian::Sock { .. } => Some(2),
            _ => None,
        };
        if let Some(n) = needed {
            if p.n() != n {
                return Err(Error::Dimension(format!(
                    "{} Lagrangian needs n = {n}, got n = {}",
                    self.name(),
                    p.n()
                )));
            }
        }
        if let Some(v) = self.potential() {
            if v.dim() != p.dim() {
                return Err(Error::Dimension("potential lives on a different torus".into()));
            }
        }
        Ok(())
    }

    /// Row scales applied to the fibers before taking the volume.
    fn volume_scales(&self, n: usize) -> Vec<f64> {
        match self {
            Lagrangian::Sock { beta, .. } => vec![1.0, *beta],
            _ => vec![1.0; n],
        }
    }

    pub fn value(&self, p: &PhasePoint) -> Result<f64> {
        self.check(p)?;
        let sq = |p: &PhasePoint| p.fibers().iter().flatten().map(|c| c * c).sum::<f64>();
        let kinetic = match self {
            Lagrangian::Length => sq(p).sqrt(),
            Lagrangian::Mechanical { .. } | Lagrangian::Dirichlet => 0.5 * sq(p),
            Lagrangian::Volume | Lagrangian::Sock { .. } => {
                let scales = self.volume_scales(p.n());
                let w: Vec<Vec<f64>> = p
                    .fibers()
                    .iter()
                    .zip(&scales)
                    .map(|(v, s)| v.iter().map(|c| s * c).collect())
                    .collect();
                fiber_volume(&w)
            }
        };
        Ok(kinetic + self.potential().map_or(0.0, |v| v.value(p.x())))
    }

    /// `dL/dx`.
    pub fn base_gradient(&self, p: &PhasePoint) -> Result<Vec<f64>> {
        self.check(p)?;
        Ok(match self.potential() {
            Some(v) => v.gradient(p.x()),
            None => vec![0.0; p.dim()],
        })
    }

    /// `d^2 L / dx dx`.
    pub fn base_hessian(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>> {
        self.check(p)?;
        Ok(match self.potential() {
            Some(v) => v.hessian(p.x()),
            None => vec![vec![0.0; p.dim()]; p.dim()],
        })
    }

    /// `d^2 L / dv_r dx_k` over flat fiber coordinates `r`. Every built-in
    /// separates into a kinetic and a potential part, so this vanishes.
    pub fn mixed_hessian(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>> {
        self.check(p)?;
        Ok(vec![vec![0.0; p.dim()]; p.n() * p.dim()])
    }

    /// `nabla_{v_i} L`, `n x d`.
    pub fn fiber_gradient(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>> {
        self.check(p)?;
        let (d, n) = (p.dim(), p.n());
        match self {
            Lagrangian::Length => {
                let v = p.fiber(0);
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::NonDifferentiable);
                }
                Ok(vec![v.iter().map(|c| c / norm).collect()])
            }
            Lagrangian::Mechanical { .. } | Lagrangian::Dirichlet => Ok(p.fibers().to_vec()),
            Lagrangian::Volume | Lagrangian::Sock { .. } => {
                let scales = self.volume_scales(n);
                let (_, grad, _) = volume_derivatives(p.fibers(), &scales, false)?;
                Ok((0..n).map(|i| grad[i * d..(i + 1) * d].to_vec()).collect())
            }
        }
    }

    /// `d^2 L / dv_r dv_s` over flat fiber coordinates, `nd x nd`.
    pub fn fiber_hessian(&self, p: &PhasePoint) -> Result<Vec<Vec<f64>>> {
        self.check(p)?;
        let m = p.n() * p.dim();
        match self {
            Lagrangian::Length => {
                let v = p.fiber(0);
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::NonDifferentiable);
                }
                Ok((0..m)
                    .map(|r| {
                        (0..m)
                            .map(|s| {
                                let id = if r == s { 1.0 } else { 0.0 };
                                (id - v[r] * v[s] / (norm * norm)) / norm
                            })
                            .collect()
                    })
                    .collect())
            }
            Lagrangian::Mechanical { .. } | Lagrangian::Dirichlet => Ok((0..m)
                .map(|r| (0..m).map(|s| if r == s { 1.0 } else { 0.0 }).collect())
                .collect()),
            Lagrangian::Volume | Lagrangian::Sock { .. } => {
                let scales = self.volume_scales(p.n());
                let (_, _, hess) = volume_derivatives(p.fibers(), &scales, true)?;
                Ok(hess.expect("requested"))
            }
        }
    }

    /// `g(v_i, nabla_{v_i} L) - L`.
    pub fn hamiltonian(&self, i: usize, p: &PhasePoint) -> Result<f64> {
        if i >= p.n() {
            return Err(Error::InvalidInput(format!("fiber slot {i} out of range")));
        }
        let grad = self.fiber_gradient(p)?;
        let pv: f64 = grad[i].iter().zip(p.fiber(i)).map(|(a, b)| a * b).sum();
        Ok(pv - self.value(p)?)
    }

    /// Largest absolute difference between the analytic first derivatives
    /// and central differences at step `h`.
    pub fn self_test(&self, p: &PhasePoint, h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let base = self.base_gradient(p)?;
        let fiber = flat(&self.fiber_gradient(p)?);
        for q in 0..p.coordinate_count() {
            let fd = (self.value(&p.shifted_axis(q, h))? - self.value(&p.shifted_axis(q, -h))?) / (2.0 * h);
            let exact = if q < p.dim() { base[q] } else { fiber[q - p.dim()] };
            worst = worst.max((fd - exact).abs());
        }
        Ok(worst)
    }
}

/// Value, gradient and optionally Hessian of `V -> vol(S V)` over the flat
/// fiber coordinates, where `S` scales fiber `i` by `scales[i]`.
///
/// With `W = S V`, `G = W W^T`, `A = G^-1` and `P = A W`:
/// `d vol / dW = vol P` and
/// `d^2 vol / dW_ab dW_ck = vol (P_ab P_ck + dP_ck / dW_ab)` where
/// `dP / dW_ab = -A (E W^T + W E^T) A W + A E`, `E = e_a e_b^T`.
type VolumeDerivatives = (f64, Vec<f64>, Option<Vec<Vec<f64>>>);

fn volume_derivatives(fibers: &[Vec<f64>], scales: &[f64], hessian: bool) -> Result<VolumeDerivatives> {
    let n = fibers.len();
    let d = fibers[0].len();
    let w = DMatrix::from_fn(n, d, |i, j| scales[i] * fibers[i][j]);
    let g = &w * w.transpose();
    let vol = g.determinant().abs().sqrt();
    let scale: f64 = (0..n).map(|i| w.row(i).norm()).product();
    if vol <= DEGENERACY_TOL * scale || scale == 0.0 {
        return Err(Error::NonDifferentiable);
    }
    let a = g.try_inverse().ok_or(Error::NonDifferentiable)?;
    let pm = &a * &w;
    let idx = |i: usize, j: usize| i * d + j;
    let mut grad = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            grad[idx(i, j)] = scales[i] * vol * pm[(i, j)];
        }
    }
    if !hessian {
        return Ok((vol, grad, None));
    }
    let mut hess = vec![vec![0.0; n * d]; n * d];
    let aw = &a * &w;
    for ai in 0..n {
        for bj in 0..d {
            let mut e = DMatrix::zeros(n, d);
            e[(ai, bj)] = 1.0;
            let dp = -(&a * (&e * w.transpose() + &w * e.transpose()) * &aw) + &a * &e;
            for ci in 0..n {
                for kj in 0..d {
                    let second = vol * (pm[(ai, bj)] * pm[(ci, kj)] + dp[(ci, kj)]);
                    hess[idx(ai, bj)][idx(ci, kj)] = scales[ai] * scales[ci] * second;
                }
            }
        }
    }
    Ok((vol, grad, Some(hess)))
}

impl TestFunction for Lagrangian {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        Lagrangian::value(self, p)
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        let d = p.dim();
        if index.len() != p.coordinate_count() {
            return Err(Error::Dimension("multi-index length mismatch".into()));
        }
        let base: u32 = index.orders()[..d].iter().sum();
        let fiber: u32 = index.orders()[d..].iter().sum();
        if base == 0 && fiber == 0 {
            return Lagrangian::value(self, p);
        }
        if base > 0 && fiber > 0 {
            self.check(p)?;
            return Ok(0.0);
        }
        if fiber == 0 {
            self.check(p)?;
            return Ok(self
                .potential()
                .map_or(0.0, |v| v.derivative(p.x(), &index.orders()[..d])));
        }
        let coords: Vec<usize> = index.orders()[d..]
            .iter()
            .enumerate()
            .flat_map(|(r, &o)| std::iter::repeat_n(r, o as usize))
            .collect();
        match coords.len() {
            1 => Ok(flat(&self.fiber_gradient(p)?)[coords[0]]),
            2 => Ok(self.fiber_hessian(p)?[coords[0]][coords[1]]),
            _ => match self {
                Lagrangian::Mechanical { .. } | Lagrangian::Dirichlet => {
                    self.check(p)?;
                    Ok(0.0)
                }
                _ => {
                    // reject nonsmooth points before differencing across them
                    self.fiber_gradient(p)?;
                    fd_derivative(&|q: &PhasePoint| Lagrangian::value(self, q), p, index)
                }
            },
        }
    }

    fn label(&self) -> String {
        self.name().into()
    }
}

/// `A_L(mu) = int L d mu`.
pub fn action(l: &Lagrangian, mu: &AtomicMeasure) -> Result<f64> {
    mu.try_integrate(|p| l.value(p))
}

/// Per-atom `g(v_i, nabla_{v_i} L) - L + A_L(mu)`.
pub fn energy_defect(l: &Lagrangian, mu: &AtomicMeasure, i: usize) -> Result<Vec<f64>> {
    let a = action(l, mu)?;
    mu.atoms().iter().map(|atom| Ok(l.hamiltonian(i, &atom.point)? + a)).collect()
}

/// `H_i(p) = g(v_i, nabla_{v_i} L(p)) - L(p)`.
pub fn hamiltonian(l: &Lagrangian, i: usize, p: &PhasePoint) -> Result<f64> {
    l.hamiltonian(i, p)
}

/// Mean of the per-atom defects weighted by `mu`, for reporting.
pub fn mean_energy_defect(l: &Lagrangian, mu: &AtomicMeasure, i: usize) -> Result<f64> {
    let defects = energy_defect(l, mu, i)?;
    let terms: Vec<f64> = mu.atoms().iter().zip(&defects).map(|(a, e)| a.weight * e).collect();
    Ok(pairwise_sum(&terms))
}
