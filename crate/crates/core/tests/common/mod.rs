#![allow(dead_code)]

use holonomic::geometry::{Phase, PhasePoint, TrigPolynomial};
use proptest::prelude::*;

pub fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, d)
}

pub fn fiber(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, d)
}

pub fn phase_point(d: usize, n: usize) -> impl Strategy<Value = PhasePoint> {
    (coords(d), prop::collection::vec(fiber(d), n)).prop_map(|(x, v)| PhasePoint::new(x, v).unwrap())
}

/// Trig polynomial on the `d`-torus with every mode of cutoff 1 or 2.
pub fn trig(d: usize) -> impl Strategy<Value = TrigPolynomial> {
    let modes = holonomic::geometry::Harmonic::basis(d, 2);
    prop::collection::vec(-1.0..1.0f64, modes.len()).prop_map(move |coeffs| {
        let mut p = TrigPolynomial::zero(d);
        for (h, c) in modes.iter().zip(coeffs) {
            p.add_term(h.freq.clone(), h.phase, c);
        }
        p
    })
}

pub fn single_mode(d: usize, freq: Vec<i32>, phase: Phase, coeff: f64) -> TrigPolynomial {
    let mut p = TrigPolynomial::zero(d);
    p.add_term(freq, phase, coeff);
    p
}

/// Fixed case count, no regression files.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
