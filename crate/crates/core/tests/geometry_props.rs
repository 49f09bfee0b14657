mod common;

use common::{coords, fiber, phase_point};
use holonomic::geometry::{fiber_volume, FourierForm, PhasePoint, TorusPoint};
use proptest::prelude::*;

fn random_form(d: usize, n: usize, coeffs: &[f64]) -> FourierForm {
    let mut form = FourierForm::zero(d, n);
    for (b, c) in FourierForm::basis(d, n, 1).iter().zip(coeffs) {
        form.add_scaled(b, *c).unwrap();
    }
    form
}

proptest! {
    #![proptest_config(common::config(100))]

    #[test]
    fn torus_distance_is_symmetric_and_bounded(a in coords(3), b in coords(3)) {
        let (p, q) = (TorusPoint::new(a), TorusPoint::new(b));
        prop_assert_eq!(p.distance(&q), q.distance(&p));
        prop_assert!(p.distance(&q) <= 3.0 * 0.5 + 1e-15);
    }

    #[test]
    fn volume_is_invariant_under_permutation_and_shear(
        v in prop::collection::vec(fiber(3), 3),
        s in -3.0..3.0f64,
    ) {
        let vol = fiber_volume(&v);
        let swapped = vec![v[2].clone(), v[0].clone(), v[1].clone()];
        let sheared: Vec<Vec<f64>> = vec![
            v[0].iter().zip(&v[1]).map(|(a, b)| a + s * b).collect(),
            v[1].clone(),
            v[2].clone(),
        ];
        let scale = 1.0 + vol;
        prop_assert!((fiber_volume(&swapped) - vol).abs() <= 1e-10 * scale);
        prop_assert!((fiber_volume(&sheared) - vol).abs() <= 1e-10 * scale.max(1.0 + fiber_volume(&sheared)));
    }

    #[test]
    fn forms_are_alternating(
        p in phase_point(3, 2),
        coeffs in prop::collection::vec(-1.0..1.0f64, 81),
    ) {
        let form = random_form(3, 2, &coeffs);
        let swapped = p.with_fibers(vec![p.fiber(1).to_vec(), p.fiber(0).to_vec()]);
        let (a, b) = (form.eval(&p).unwrap(), form.eval(&swapped).unwrap());
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        let repeated = p.with_fibers(vec![p.fiber(0).to_vec(), p.fiber(0).to_vec()]);
        prop_assert!(form.eval(&repeated).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn forms_are_multilinear(
        p in phase_point(2, 1),
        w in fiber(2),
        s in -2.0..2.0f64,
        coeffs in prop::collection::vec(-1.0..1.0f64, 18),
    ) {
        let form = random_form(2, 1, &coeffs);
        let combo: Vec<f64> = p.fiber(0).iter().zip(&w).map(|(a, b)| a + s * b).collect();
        let lhs = form.eval(&p.with_fibers(vec![combo])).unwrap();
        let rhs = form.eval(&p).unwrap() + s * form.eval(&p.with_fibers(vec![w])).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn fiber_gradient_matches_central_differences(
        p in phase_point(3, 2),
        coeffs in prop::collection::vec(-1.0..1.0f64, 81),
    ) {
        let form = random_form(3, 2, &coeffs);
        let grad = form.fiber_gradient(&p).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            for j in 0..3 {
                let q = 3 + i * 3 + j;
                let fd = (form.eval(&p.shifted_axis(q, h)).unwrap() - form.eval(&p.shifted_axis(q, -h)).unwrap()) / (2.0 * h);
                prop_assert!((fd - grad[i][j]).abs() <= 1e-6, "{} vs {}", fd, grad[i][j]);
            }
        }
    }

    #[test]
    fn exterior_derivative_squares_to_zero(coeffs in prop::collection::vec(-1.0..1.0f64, 9)) {
        let mut f = FourierForm::zero(2, 0);
        for (b, c) in FourierForm::basis(2, 0, 1).iter().zip(&coeffs) {
            f.add_scaled(b, *c).unwrap();
        }
        prop_assert!(f.exterior_derivative().unwrap().exterior_derivative().unwrap().is_zero());
    }
}

#[test]
fn phase_point_wraps_base() {
    let p = PhasePoint::new(vec![1.5, -0.25], vec![vec![1.0, 0.0]]).unwrap();
    assert_eq!(p.x(), &[0.5, 0.75]);
}
