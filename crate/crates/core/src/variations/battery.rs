//! Seeded random generators and test-function batteries.

use super::{horizontal, project_vertical, transpositional_values, vertical, VariationFamily};
use crate::distributions::{PolyTrigFunction, TestFunction};
use crate::geometry::{FourierForm, Harmonic, TrigPolynomial, VectorField};
use crate::measures::AtomicMeasure;
use crate::numeric::pairwise_sum;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    /// Frequency cutoff of the random fields, sigmas and shifts.
    pub field_cutoff: u32,
    /// Cutoff of the exact forms the vertical shifts are projected against.
    pub check_cutoff: u32,
    /// Also annihilate the constant forms (vertical) and center sigma
    /// (transpositional), so that generators preserve the homology class.
    pub homological: bool,
    pub horizontal: usize,
    pub vertical: usize,
    pub transpositional: usize,
    /// Bound on the sup norm of each random trig polynomial.
    pub amplitude: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            field_cutoff: 1,
            check_cutoff: 1,
            homological: false,
            horizontal: 20,
            vertical: 20,
            transpositional: 20,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub label: String,
    pub family: VariationFamily,
    /// The negated generator is also admissible.
    pub two_sided: bool,
}

/// Trig polynomial with uniform coefficients over every mode of cutoff `k`,
/// scaled so that its sup norm is at most `amplitude`.
pub fn random_trig<R: Rng>(rng: &mut R, d: usize, k: u32, amplitude: f64) -> TrigPolynomial {
    let modes = Harmonic::basis(d, k);
    let scale = amplitude / modes.len() as f64;
    let mut p = TrigPolynomial::zero(d);
    for h in modes {
        p.add_term(h.freq, h.phase, scale * rng.random_range(-1.0..=1.0));
    }
    p
}

pub fn random_vector_field<R: Rng>(rng: &mut R, d: usize, k: u32, amplitude: f64) -> VectorField {
    VectorField::new((0..d).map(|_| random_trig(rng, d, k, amplitude)).collect()).expect("matching dimensions")
}

/// `sigma - int sigma dmu`.
pub fn centered(mu: &AtomicMeasure, sigma: &[f64]) -> Vec<f64> {
    let prod: Vec<f64> = mu.atoms().iter().zip(sigma).map(|(a, s)| a.weight * s).collect();
    let mean = pairwise_sum(&prod) / mu.total_weight();
    sigma.iter().map(|s| s - mean).collect()
}

/// Horizontal, projected vertical and transpositional generators over `mu`,
/// all drawn from one ChaCha stream seeded by `seed`.
pub fn random_generators(mu: &AtomicMeasure, cfg: &BatteryConfig, seed: u64) -> Result<Vec<Generator>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, n) = (mu.dim(), mu.n());
    let (k, amp) = (cfg.field_cutoff, cfg.amplitude);
    let mut out = Vec::with_capacity(cfg.horizontal + cfg.vertical + cfg.transpositional);
    for g in 0..cfg.horizontal {
        let field = random_vector_field(&mut rng, d, k, amp);
        out.push(Generator {
            label: format!("horizontal-{g}"),
            family: horizontal(mu, &field)?,
            two_sided: true,
        });
    }
    for g in 0..cfg.vertical {
        let polys: Vec<TrigPolynomial> = (0..n * d).map(|_| random_trig(&mut rng, d, k, amp)).collect();
        let raw: Vec<Vec<Vec<f64>>> = mu
            .atoms()
            .iter()
            .map(|a| {
                (0..n)
                    .map(|i| (0..d).map(|j| polys[i * d + j].value(a.point.x())).collect())
                    .collect()
            })
            .collect();
        let shifts = project_vertical(mu, &raw, cfg.check_cutoff, cfg.homological)?;
        out.push(Generator {
            label: format!("vertical-{g}"),
            family: vertical(mu, shifts)?,
            two_sided: true,
        });
    }
    for g in 0..cfg.transpositional {
        let poly = random_trig(&mut rng, d, k, amp);
        let mut sigma: Vec<f64> = mu.atoms().iter().map(|a| poly.value(a.point.x())).collect();
        if cfg.homological {
            sigma = centered(mu, &sigma);
        }
        out.push(Generator {
            label: format!("transpositional-{g}"),
            family: transpositional_values(mu, sigma, g % n)?,
            two_sided: true,
        });
    }
    Ok(out)
}

/// Random smooth test functions: trig polynomials in `x` times quadratics in
/// the fibers, alternating with random `n`-forms (linear in each fiber).
pub fn test_battery(d: usize, n: usize, count: usize, seed: u64) -> Vec<Box<dyn TestFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n * d;
    let mut out: Vec<Box<dyn TestFunction>> = Vec::with_capacity(count);
    for k in 0..count {
        if k % 2 == 0 {
            let base = random_trig(&mut rng, d, 2, 1.0);
            let constant = rng.random_range(-1.0..=1.0);
            let linear = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let quadratic = (0..len)
                .map(|_| (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect();
            out.push(Box::new(PolyTrigFunction {
                base,
                constant,
                linear,
                quadratic,
            }));
        } else {
            let mut form = FourierForm::zero(d, n);
            for basis_form in FourierForm::basis(d, n, 1) {
                form.add_scaled(&basis_form, rng.random_range(-1.0..=1.0))
                    .expect("same dimension and degree");
            }
            out.push(Box::new(form));
        }
    }
    out
}
