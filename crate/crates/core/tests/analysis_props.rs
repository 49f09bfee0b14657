mod common;

use holonomic::analysis::{weak_kam_fit, FitMode};
use holonomic::distributions::check_hol;
use holonomic::lagrangians::Lagrangian;
use holonomic::measures::{measure_from_chain, AtomicMeasure, Cell, CellChain};
use holonomic::variations::vertical;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn wavy_loop(samples: usize, a: f64, b: f64) -> AtomicMeasure {
    let cell = Cell::sample(2, vec![samples], vec![true], 1.0, |t| {
        vec![t[0] + a * (TAU * t[0]).sin(), 0.4 + b * (TAU * t[0]).sin()]
    })
    .unwrap();
    measure_from_chain(&CellChain::new(vec![cell])).unwrap()
}

proptest! {
    #![proptest_config(common::config(16))]

    #[test]
    fn fit_residual_is_nonincreasing_in_the_cutoff(a in -0.1..0.1f64, b in -0.2..0.2f64) {
        let mu = wavy_loop(48, a, b);
        for mode in [FitMode::Exact, FitMode::Closed] {
            let res: Vec<f64> = (1..=3)
                .map(|k| weak_kam_fit(&mu, &Lagrangian::mechanical(2), k, mode).unwrap().residual)
                .collect();
            for w in res.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-10, "{:?}", res);
            }
        }
    }

    #[test]
    fn exact_fit_remainder_is_a_tangent_vertical_direction(a in -0.1..0.1f64, b in -0.2..0.2f64, k in 1u32..4) {
        let mu = wavy_loop(48, a, b);
        let l = Lagrangian::mechanical(2);
        let fit = weak_kam_fit(&mu, &l, k, FitMode::Exact).unwrap();
        let omega = fit.form();
        let remainder: Vec<Vec<Vec<f64>>> = mu
            .atoms()
            .iter()
            .map(|atom| {
                let target = l.fiber_gradient(&atom.point).unwrap();
                let fitted = omega.fiber_gradient(&atom.point).unwrap();
                vec![target[0].iter().zip(&fitted[0]).map(|(x, y)| x - y).collect()]
            })
            .collect();
        let report = check_hol(vertical(&mu, remainder).unwrap().distribution(), k, 1e-9).unwrap();
        prop_assert!(report.pass, "max residual {:e}", report.max_abs);
    }
}
