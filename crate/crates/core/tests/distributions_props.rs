mod common;

use common::{fiber, phase_point, trig};
use holonomic::distributions::{
    check_prob, continuity_field, smooth, stencil, BaseFunction, Constant, MildDistribution, MultiIndex,
    PolyTrigFunction, TestFunction,
};
use holonomic::geometry::TrigPolynomial;
use holonomic::measures::{Atom, AtomicMeasure};
use holonomic::variations::point_variation;
use proptest::prelude::*;
use std::f64::consts::TAU;

/// Order-0 atoms plus first-order point variations.
fn distribution() -> impl Strategy<Value = MildDistribution> {
    (
        prop::collection::vec((phase_point(2, 1), -1.0..1.0f64), 1..5),
        prop::collection::vec((phase_point(2, 1), fiber(2)), 1..4),
    )
        .prop_map(|(zero, first)| {
            let atoms = zero.into_iter().map(|(p, w)| Atom::new(p, w)).collect();
            let nu = MildDistribution::from_measure(AtomicMeasure::signed(2, 1, atoms).unwrap());
            let items: Vec<_> = first.into_iter().map(|(p, w)| (p, vec![w])).collect();
            nu.sum(&point_variation(&items).unwrap()).unwrap()
        })
}

fn poly(base: TrigPolynomial, c: f64) -> PolyTrigFunction {
    PolyTrigFunction {
        base,
        constant: c,
        linear: vec![0.3, -c],
        quadratic: vec![vec![1.0, c], vec![c, -0.5]],
    }
}

proptest! {
    #![proptest_config(common::config(60))]

    #[test]
    fn pairing_is_bilinear(
        a in distribution(),
        b in distribution(),
        s in -2.0..2.0f64,
        f in trig(2),
        g in trig(2),
    ) {
        let f_test = BaseFunction(f.clone());
        let fg = BaseFunction({
            let mut h = f.clone();
            h.add_scaled(&g, s);
            h
        });
        let g_test = BaseFunction(g);
        let sum = a.sum(&b.scaled(s)).unwrap();
        let lhs = sum.pair(&f_test).unwrap();
        let rhs = a.pair(&f_test).unwrap() + s * b.pair(&f_test).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let lhs = a.pair(&fg).unwrap();
        let rhs = a.pair(&f_test).unwrap() + s * a.pair(&g_test).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn smoothing_preserves_total_mass(eta in distribution(), t in 0.01..0.2f64, q in 2usize..5) {
        let cloud = smooth(&eta, t, q).unwrap();
        let before = eta.pair(&Constant(1.0)).unwrap();
        let scale: f64 = cloud.atoms().iter().map(|a| a.weight.abs()).sum();
        prop_assert!((cloud.total_weight() - before).abs() <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn point_variations_pass_prob(items in prop::collection::vec((phase_point(2, 1), fiber(2)), 1..6)) {
        let items: Vec<_> = items.into_iter().map(|(p, w)| (p, vec![w])).collect();
        prop_assert_eq!(check_prob(&point_variation(&items).unwrap(), 0.0).max_abs, 0.0);
    }

    #[test]
    fn pairing_with_poly_trig_matches_its_definition(p in phase_point(2, 1), w in fiber(2), base in trig(2), c in -1.0..1.0f64) {
        // <-d_w delta_p, f> = grad_v f(p) . w
        let f = poly(base, c);
        let eta = point_variation(&[(p.clone(), vec![w.clone()])]).unwrap();
        let grad = f.gradient(&p).unwrap();
        let expected = grad[2] * w[0] + grad[3] * w[1];
        let got = eta.pair(&f).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn symmetric_stencils_reproduce_moments_and_converge() {
    for half in 1..=3i32 {
        let nodes: Vec<Vec<f64>> = (-half..=half).map(|k| vec![k as f64]).collect();
        for order in 1..=(2 * half as u32).min(4) {
            let w = stencil(&[order], &nodes, 1.0).unwrap();
            for k in 0..=order {
                let got: f64 = w.iter().zip(&nodes).map(|(c, x)| c * x[0].powi(k as i32)).sum();
                let want = if k == order { (1..=k).map(f64::from).product() } else { 0.0 };
                assert!((got - want).abs() <= 1e-10, "order {order} moment {k}: {got}");
            }
            let exact = |x: f64| TAU.powi(order as i32) * (TAU * x + order as f64 * std::f64::consts::FRAC_PI_2).sin();
            let err = |h: f64| {
                let w = stencil(&[order], &nodes, h).unwrap();
                let est: f64 = w.iter().zip(&nodes).map(|(c, x)| c * (TAU * (0.2 + h * x[0])).sin()).sum();
                (est - exact(0.2)).abs()
            };
            let rate = (err(0.02) / err(0.01)).log2();
            assert!(rate >= 1.9, "order {order} on {} nodes: rate {rate}", nodes.len());
        }
    }
}

#[test]
fn continuity_field_norm_is_monotone_in_the_test_set() {
    let atoms: Vec<Atom> = (0..24)
        .map(|k| {
            let p = holonomic::geometry::PhasePoint::new(vec![(k as f64 + 0.5) / 24.0, 0.3], vec![vec![1.0, 0.0]]).unwrap();
            Atom::new(p, 1.0 / 24.0)
        })
        .collect();
    let mu = AtomicMeasure::new(2, 1, atoms).unwrap();
    let mut eta = MildDistribution::zero(2, 1);
    let src = holonomic::geometry::PhasePoint::new(vec![0.4, 0.3], vec![vec![1.0, 0.0]]).unwrap();
    eta.push(MultiIndex::base(2, 1, 0), AtomicMeasure::signed(2, 1, vec![Atom::new(src, -1.0)]).unwrap()).unwrap();
    let tests: Vec<BaseFunction> = (1..=6)
        .flat_map(|m| {
            [holonomic::geometry::Phase::Cos, holonomic::geometry::Phase::Sin]
                .map(|ph| BaseFunction(common::single_mode(2, vec![m, 0], ph, 1.0)))
        })
        .collect();
    let mut last = f64::INFINITY;
    for keep in (1..=tests.len()).rev() {
        let refs: Vec<&dyn TestFunction> = tests[..keep].iter().map(|f| f as &dyn TestFunction).collect();
        let field = continuity_field(&mu, &eta, &refs, 1e-8).unwrap();
        assert!(field.norm <= last + 1e-12);
        last = field.norm;
    }
}
