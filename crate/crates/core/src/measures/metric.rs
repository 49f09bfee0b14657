use super::AtomicMeasure;
use crate::geometry::{Harmonic, PhasePoint};
use crate::numeric::pairwise_sum;

/// Version tag of the frozen test-function catalog, written into measure files.
pub const METRIC_VERSION: u32 = 1;

const ENVELOPE_SIGMA: f64 = 0.75;
const CATALOG_LEN: usize = 64;

/// Test functions `f_k(x, v) = h_m(x) exp(-|v - c|^2 / (2 sigma^2))` with
/// harmonics `|m|_inf <= 1` and fiber centers `0, +-e_q`, truncated to 64.
///
/// Both factors reach 1 in absolute value, so `sup |f_k| = 1`.
#[derive(Debug, Clone)]
pub struct MetricCatalog {
    entries: Vec<(Harmonic, Vec<f64>)>,
}

impl MetricCatalog {
    pub fn new(d: usize, n: usize) -> Self {
        let coords = n * d;
        let mut centers = vec![vec![0.0; coords]];
        for q in 0..coords {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; coords];
                c[q] = s;
                centers.push(c);
            }
        }
        let harmonics = Harmonic::basis(d, 1);
        let mut entries = Vec::new();
        'outer: for c in &centers {
            for h in &harmonics {
                entries.push((h.clone(), c.clone()));
                if entries.len() == CATALOG_LEN {
                    break 'outer;
                }
            }
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eval(&self, k: usize, p: &PhasePoint) -> f64 {
        let (h, c) = &self.entries[k];
        let mut r2 = 0.0;
        for (i, v) in p.fibers().iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                let diff = vj - c[i * p.dim() + j];
                r2 += diff * diff;
            }
        }
        h.value(p.x()) * (-r2 / (2.0 * ENVELOPE_SIGMA * ENVELOPE_SIGMA)).exp()
    }
}

/// `|M(mu1) - M(mu2)| + sum_k 2^-k / sup|f_k| * |int |f_k| dmu1 - int |f_k| dmu2|`
/// over the frozen catalog.
pub fn mild_distance(mu1: &AtomicMeasure, mu2: &AtomicMeasure) -> f64 {
    let catalog = MetricCatalog::new(mu1.dim(), mu1.n());
    let mut terms = Vec::with_capacity(catalog.len() + 1);
    terms.push((mu1.mass() - mu2.mass()).abs());
    for k in 0..catalog.len() {
        let a = mu1.integrate(|p| catalog.eval(k, p).abs());
        let b = mu2.integrate(|p| catalog.eval(k, p).abs());
        terms.push(0.5f64.powi(k as i32 + 1) * (a - b).abs());
    }
    pairwise_sum(&terms)
}
