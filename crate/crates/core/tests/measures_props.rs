mod common;

use common::phase_point;
use holonomic::fixtures::line_measure;
use holonomic::measures::{
    holonomy_residual, homology_class, measure_from_chain, mild_distance, Atom, AtomicMeasure, Cell, CellChain,
};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn cloud() -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((phase_point(2, 1), 0.01..1.0f64), 1..12)
        .prop_map(|atoms| AtomicMeasure::new(2, 1, atoms.into_iter().map(|(p, w)| Atom::new(p, w)).collect()).unwrap())
}

fn wavy_loop(samples: usize, a: f64, b: f64) -> AtomicMeasure {
    let cell = Cell::sample(2, vec![samples], vec![true], 1.0, |t| {
        vec![t[0] + a * (TAU * t[0]).sin(), b * (TAU * t[0]).cos()]
    })
    .unwrap();
    measure_from_chain(&CellChain::new(vec![cell])).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

proptest! {
    #![proptest_config(common::config(40))]

    #[test]
    fn mild_distance_is_symmetric(a in cloud(), b in cloud()) {
        prop_assert_eq!(mild_distance(&a, &b), mild_distance(&b, &a));
        prop_assert_eq!(mild_distance(&a, &a), 0.0);
    }

    #[test]
    fn mass_and_integrals_are_linear(a in cloud(), b in cloud(), s in 0.0..3.0f64) {
        let sum = a.sum(&b).unwrap();
        let f = |p: &holonomic::geometry::PhasePoint| (TAU * p.x()[0]).cos() * p.fiber(0)[1];
        prop_assert!((sum.mass() - a.mass() - b.mass()).abs() <= 1e-12 * (1.0 + sum.mass()));
        prop_assert!((sum.integrate(f) - a.integrate(f) - b.integrate(f)).abs() <= 1e-12 * (1.0 + sum.mass()));
        prop_assert!((a.scaled(s).mass() - s * a.mass()).abs() <= 1e-12 * (1.0 + s * a.mass()));
    }

    #[test]
    fn chain_weight_is_sum_of_coefficients(c1 in 0.1..2.0f64, c2 in 0.1..2.0f64, n in 4usize..40) {
        let first = Cell::sample(2, vec![n], vec![true], c1, |t| vec![t[0], 0.2]).unwrap();
        let second = Cell::sample(2, vec![n + 3], vec![true], c2, |t| vec![0.7, t[0]]).unwrap();
        let chain = CellChain::new(vec![first, second]);
        let mu = measure_from_chain(&chain).unwrap();
        prop_assert!((mu.total_weight() - (c1 + c2)).abs() <= 1e-12 * (c1 + c2));
        prop_assert!((chain.total_coefficient() - (c1 + c2)).abs() <= 1e-15 * (c1 + c2));
    }

    #[test]
    fn homology_class_survives_cycle_differences(h1 in 0.0..1.0f64, h2 in 0.0..1.0f64, t in -2.0..2.0f64) {
        let base = line_measure(16, 0.5, 1.0).unwrap();
        let diff = line_measure(16, h1, 1.0).unwrap().sum(&line_measure(16, h2, 1.0).unwrap().scaled(-1.0)).unwrap();
        let moved = base.sum(&diff.scaled(t)).unwrap();
        let (r0, r1) = (homology_class(&base), homology_class(&moved));
        for (a, b) in r0.iter().zip(&r1) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn closed_curve_holonomy_residual_decays_quadratically() {
    let residuals: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| max_abs(&holonomy_residual(&wavy_loop(n, 0.1, 0.15), 3)))
        .collect();
    for w in residuals.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate >= 1.8, "{residuals:?}");
    }
}
