//! Reference measures and distributions used by examples, tests and the CLI.

use crate::distributions::MildDistribution;
use crate::geometry::PhasePoint;
use crate::measures::{measure_from_chain, AtomicMeasure, Cell, CellChain};
use crate::variations::point_variation;
use crate::Result;

/// Corner curve on the 2-torus: the horizontal loop through the origin
/// followed by the vertical one, each a periodic cell with coefficient 1/2.
/// The parameterizations are shifted half a sample so that the quadrature
/// nodes sit at `k / N` and the origin carries atoms on both branches.
pub fn corner_chain(samples: usize) -> Result<CellChain> {
    let shift = 0.5 / samples as f64;
    let horizontal = Cell::sample(2, vec![samples], vec![true], 0.5, |t| vec![t[0] - shift, 0.0])?;
    let vertical = Cell::sample(2, vec![samples], vec![true], 0.5, |t| vec![0.0, t[0] - shift])?;
    Ok(CellChain::new(vec![horizontal, vertical]))
}

pub fn corner_measure(samples: usize) -> Result<AtomicMeasure> {
    measure_from_chain(&corner_chain(samples)?)
}

/// `gamma(t) = (speed t, height)` on the 2-torus, a closed loop for integer speed.
pub fn line_measure(samples: usize, height: f64, speed: f64) -> Result<AtomicMeasure> {
    let cell = Cell::sample(2, vec![samples], vec![true], 1.0, |t| vec![speed * t[0], height])?;
    measure_from_chain(&CellChain::new(vec![cell]))
}

/// The open arc `gamma(t) = (t / 2, 0)`, `t in [0, 1]`.
pub fn open_arc(samples: usize) -> Result<AtomicMeasure> {
    let cell = Cell::sample(2, vec![samples], vec![false], 1.0, |t| vec![0.5 * t[0], 0.0])?;
    measure_from_chain(&CellChain::new(vec![cell]))
}

/// The two phase points of the corner curve sitting over the origin.
pub fn corner_origin_points() -> [PhasePoint; 2] {
    [
        PhasePoint::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).expect("valid point"),
        PhasePoint::new(vec![0.0, 0.0], vec![vec![0.0, 1.0]]).expect("valid point"),
    ]
}

/// Rounding the corner: `-d_(-1,1) delta_((0,0),(1,0)) - d_(1,-1) delta_((0,0),(0,1))`.
pub fn corner_distribution() -> MildDistribution {
    let [a, b] = corner_origin_points();
    point_variation(&[(a, vec![vec![-1.0, 1.0]]), (b, vec![vec![1.0, -1.0]])])
        .expect("fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::homology_class;

    #[test]
    fn corner_measure_support_and_weight() {
        let mu = corner_measure(64).unwrap();
        assert_eq!(mu.len(), 128);
        assert!(mu.is_probability());
        for a in mu.atoms() {
            let (x, v) = (a.point.x(), a.point.fiber(0));
            let on_first = x[1] == 0.0 && (v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12;
            let on_second = x[0] == 0.0 && v[0].abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12;
            assert!(on_first || on_second);
        }
        let origin = mu.atoms().iter().filter(|a| a.point.x().iter().all(|c| c.abs() < 1e-12)).count();
        assert_eq!(origin, 2);
        let rho = homology_class(&mu);
        assert!((rho[0] - 0.5).abs() < 1e-12 && (rho[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn line_measure_class() {
        let rho = homology_class(&line_measure(64, 0.3, 1.0).unwrap());
        assert!((rho[0] - 1.0).abs() < 1e-12 && rho[1].abs() < 1e-12);
    }
}
