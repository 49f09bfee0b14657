//! Flat-torus phase space.
//!
//! Points of `T^nM` over the torus `R^d / Z^d` are stored as a base point with
//! coordinates in `[0, 1)` and `n` fiber vectors in `R^d`. The metric is the
//! flat Euclidean one, so covariant derivatives are plain directional
//! derivatives.

mod forms;
mod trig;

pub use forms::FourierForm;
pub use trig::{Harmonic, Phase, TrigPolynomial, TrigTerm, VectorField};

use crate::numeric::{determinant, wrap_delta, wrap_unit};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self {
            coords: coords.into_iter().map(wrap_unit).collect(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Per-axis nearest-image displacement `other - self`.
    pub fn displacement_to(&self, other: &TorusPoint) -> Vec<f64> {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| wrap_delta(b - a))
            .collect()
    }

    /// Sum of the per-axis wrap-around distances `min(|a-b|, 1-|a-b|)`.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        self.displacement_to(other).iter().map(|c| c.abs()).sum()
    }

    pub fn translated(&self, delta: &[f64]) -> TorusPoint {
        TorusPoint::new(self.coords.iter().zip(delta).map(|(c, d)| c + d).collect())
    }
}

/// A point `(x, v_1, ..., v_n)` of `T^nM`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    base: TorusPoint,
    fibers: Vec<Vec<f64>>,
}

impl PhasePoint {
    pub fn new(base: Vec<f64>, fibers: Vec<Vec<f64>>) -> Result<Self> {
        let d = base.len();
        if d == 0 {
            return Err(Error::Dimension("torus dimension must be at least 1".into()));
        }
        if fibers.is_empty() || fibers.len() > d {
            return Err(Error::Dimension(format!(
                "fiber count {} must lie in 1..={d}",
                fibers.len()
            )));
        }
        if let Some(bad) = fibers.iter().find(|v| v.len() != d) {
            return Err(Error::Dimension(format!(
                "fiber of length {} on a {d}-torus",
                bad.len()
            )));
        }
        Ok(Self {
            base: TorusPoint::new(base),
            fibers,
        })
    }

    pub fn base(&self) -> &TorusPoint {
        &self.base
    }

    pub fn x(&self) -> &[f64] {
        self.base.coords()
    }

    pub fn fibers(&self) -> &[Vec<f64>] {
        &self.fibers
    }

    pub fn fiber(&self, i: usize) -> &[f64] {
        &self.fibers[i]
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn n(&self) -> usize {
        self.fibers.len()
    }

    /// Number of real coordinates, `(n + 1) d`.
    pub fn coordinate_count(&self) -> usize {
        (self.n() + 1) * self.dim()
    }

    /// Flat coordinate access: base axes first, then fiber `i` axis `j` at
    /// `d + i d + j`.
    pub fn coordinate(&self, q: usize) -> f64 {
        let d = self.dim();
        if q < d {
            self.base.coords()[q]
        } else {
            self.fibers[(q - d) / d][(q - d) % d]
        }
    }

    /// Shift every coordinate by `delta` (flat layout); base axes wrap.
    pub fn shifted(&self, delta: &[f64]) -> PhasePoint {
        let d = self.dim();
        let base = self.base.translated(&delta[..d]);
        let fibers = self
            .fibers
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.iter()
                    .enumerate()
                    .map(|(j, c)| c + delta[d + i * d + j])
                    .collect()
            })
            .collect();
        PhasePoint { base, fibers }
    }

    /// Shift a single flat coordinate.
    pub fn shifted_axis(&self, q: usize, h: f64) -> PhasePoint {
        let mut delta = vec![0.0; self.coordinate_count()];
        delta[q] = h;
        self.shifted(&delta)
    }

    pub fn with_fibers(&self, fibers: Vec<Vec<f64>>) -> PhasePoint {
        PhasePoint {
            base: self.base.clone(),
            fibers,
        }
    }

    /// Displacement `other - self` in flat coordinates, base part wrapped.
    pub fn displacement_to(&self, other: &PhasePoint) -> Vec<f64> {
        let mut out = self.base.displacement_to(&other.base);
        for (a, b) in self.fibers.iter().zip(&other.fibers) {
            out.extend(a.iter().zip(b).map(|(p, q)| q - p));
        }
        out
    }

    /// Euclidean length of the wrapped displacement.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.displacement_to(other)
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gram matrix `g(v_i, v_j)` of a fiber tuple.
pub fn gram(fibers: &[Vec<f64>]) -> Vec<Vec<f64>> {
    fibers
        .iter()
        .map(|a| {
            fibers
                .iter()
                .map(|b| a.iter().zip(b).map(|(p, q)| p * q).sum())
                .collect()
        })
        .collect()
}

/// `n`-dimensional volume of the fiber multivector, `sqrt|det g(v_i, v_j)|`.
pub fn vol_n(p: &PhasePoint) -> f64 {
    fiber_volume(p.fibers())
}

pub fn fiber_volume(fibers: &[Vec<f64>]) -> f64 {
    determinant(&gram(fibers)).abs().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(x: &[f64], v: &[&[f64]]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), v.iter().map(|f| f.to_vec()).collect()).unwrap()
    }

    #[test]
    fn volume_examples() {
        assert_eq!(vol_n(&pp(&[0.0, 0.0], &[&[3.0, 4.0]])), 5.0);
        assert_eq!(vol_n(&pp(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]])), 1.0);
        assert_eq!(vol_n(&pp(&[0.0, 0.0], &[&[1.0, 0.0], &[2.0, 0.0]])), 0.0);
    }

    #[test]
    fn torus_normalization_and_metric() {
        let a = TorusPoint::new(vec![1.25, -0.25]);
        assert!((a.coords()[0] - 0.25).abs() < 1e-15);
        assert!((a.coords()[1] - 0.75).abs() < 1e-15);
        let b = TorusPoint::new(vec![0.95, 0.05]);
        let c = TorusPoint::new(vec![0.05, 0.95]);
        assert!((b.distance(&c) - 0.2).abs() < 1e-12);
        assert_eq!(b.distance(&c), c.distance(&b));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PhasePoint::new(vec![0.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(PhasePoint::new(vec![0.0, 0.0], vec![vec![1.0]]).is_err());
        assert!(PhasePoint::new(vec![0.0, 0.0], vec![]).is_err());
    }

    #[test]
    fn flat_coordinates() {
        let p = pp(&[0.1, 0.2], &[&[3.0, 4.0]]);
        assert_eq!(p.coordinate_count(), 4);
        assert_eq!(p.coordinate(3), 4.0);
        let q = p.shifted_axis(0, 0.95);
        assert!((q.x()[0] - 0.05).abs() < 1e-12);
    }
}
