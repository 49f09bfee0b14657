use super::{Atom, AtomicMeasure};
use crate::geometry::PhasePoint;
use crate::numeric::{wrap_delta, wrap_unit};
use crate::{Error, Result};

/// Samples closer than this to a half-period jump cannot be lifted reliably.
const LIFT_MARGIN: f64 = 1e-9;

/// A sampled `n`-cell `gamma: [0,1]^n -> T^d` with a positive coefficient.
///
/// Samples sit at the midpoints `(k + 1/2) / N_i` of a uniform partition,
/// stored row-major (last parameter axis fastest). A periodic axis means
/// `gamma` closes up along that parameter, so differences wrap around the
/// sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    d: usize,
    shape: Vec<usize>,
    periodic: Vec<bool>,
    samples: Vec<Vec<f64>>,
    coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellChain {
    pub cells: Vec<Cell>,
}

impl Cell {
    pub fn new(
        d: usize,
        shape: Vec<usize>,
        periodic: Vec<bool>,
        samples: Vec<Vec<f64>>,
        coeff: f64,
    ) -> Result<Self> {
        let n = shape.len();
        if n == 0 || n > d {
            return Err(Error::Dimension(format!("cell of dimension {n} in a {d}-torus")));
        }
        if periodic.len() != n {
            return Err(Error::Dimension("one periodicity flag per parameter axis".into()));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(Error::InvalidInput("cells need at least 2 samples per axis".into()));
        }
        if !(coeff > 0.0) {
            return Err(Error::InvalidInput(format!("cell coefficient {coeff} must be positive")));
        }
        let count: usize = shape.iter().product();
        if samples.len() != count || samples.iter().any(|s| s.len() != d) {
            return Err(Error::Dimension(format!(
                "expected {count} samples of length {d} for shape {shape:?}"
            )));
        }
        Ok(Self {
            d,
            shape,
            periodic,
            samples,
            coeff,
        })
    }

    /// Sample `gamma` at the grid midpoints.
    pub fn sample<F: Fn(&[f64]) -> Vec<f64>>(
        d: usize,
        shape: Vec<usize>,
        periodic: Vec<bool>,
        coeff: f64,
        gamma: F,
    ) -> Result<Self> {
        let count: usize = shape.iter().product();
        let mut samples = Vec::with_capacity(count);
        let mut t = vec![0.0; shape.len()];
        for flat in 0..count {
            let mut rem = flat;
            for (axis, &size) in shape.iter().enumerate().rev() {
                t[axis] = ((rem % size) as f64 + 0.5) / size as f64;
                rem /= size;
            }
            samples.push(gamma(&t));
        }
        Self::new(d, shape, periodic, samples, coeff)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample positions reduced to the unit cube.
    pub fn base_points(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| s.iter().map(|&c| wrap_unit(c)).collect())
            .collect()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.n()];
        for axis in (0..self.n().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.shape[axis + 1];
        }
        strides
    }

    fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.shape[axis] as f64
    }

    /// Neighbor of `flat` at offset `step` along `axis`, wrapping on
    /// periodic axes; `None` past a free end.
    fn neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        let stride = self.strides()[axis];
        let size = self.shape[axis] as isize;
        let k = ((flat / stride) % self.shape[axis]) as isize;
        let mut j = k + step;
        if self.periodic[axis] {
            j = j.rem_euclid(size);
        } else if j < 0 || j >= size {
            return None;
        }
        Some((flat as isize + (j - k) * stride as isize) as usize)
    }

    /// Lifted displacement `gamma[b] - gamma[a]` through the nearest image.
    fn lift(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.d);
        for axis in 0..self.d {
            let delta = wrap_delta(self.samples[b][axis] - self.samples[a][axis]);
            if delta.abs() >= 0.5 - LIFT_MARGIN {
                return Err(Error::AmbiguousLift {
                    index: a,
                    axis,
                    jump: delta,
                });
            }
            out.push(delta);
        }
        Ok(out)
    }

    /// Derivative along `axis` of a sampled quantity, given the difference
    /// operator `diff(a, b) = value[b] - value[a]`. Central in the interior
    /// and on periodic axes, second-order one-sided at free ends.
    fn derivative_along<D>(&self, flat: usize, axis: usize, diff: &D) -> Result<Vec<f64>>
    where
        D: Fn(usize, usize) -> Result<Vec<f64>>,
    {
        let h = self.spacing(axis);
        let fwd = self.neighbor(flat, axis, 1);
        let bwd = self.neighbor(flat, axis, -1);
        match (bwd, fwd) {
            (Some(b), Some(f)) => {
                let up = diff(flat, f)?;
                let down = diff(flat, b)?;
                Ok(up.iter().zip(&down).map(|(u, w)| (u - w) / (2.0 * h)).collect())
            }
            (None, Some(f)) => self.one_sided(flat, f, self.neighbor(flat, axis, 2), h, diff),
            (Some(b), None) => Ok(self
                .one_sided(flat, b, self.neighbor(flat, axis, -2), h, diff)?
                .into_iter()
                .map(|c| -c)
                .collect()),
            (None, None) => unreachable!("at least two samples per axis"),
        }
    }

    fn one_sided<D>(&self, k0: usize, k1: usize, k2: Option<usize>, h: f64, diff: &D) -> Result<Vec<f64>>
    where
        D: Fn(usize, usize) -> Result<Vec<f64>>,
    {
        let d1 = diff(k0, k1)?;
        match k2 {
            Some(k2) => {
                let d12 = diff(k1, k2)?;
                // (-3 g0 + 4 g1 - g2) / 2h with g2 - g0 = d1 + d12
                Ok(d1
                    .iter()
                    .zip(&d12)
                    .map(|(a, b)| (3.0 * a - b) / (2.0 * h))
                    .collect())
            }
            None => Ok(d1.iter().map(|a| a / h).collect()),
        }
    }

    /// Partial derivatives `d gamma / d t_i` at every sample, `[sample][i][axis]`.
    pub fn first_derivatives(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let lift = |a: usize, b: usize| self.lift(a, b);
        (0..self.len())
            .map(|flat| {
                (0..self.n())
                    .map(|i| self.derivative_along(flat, i, &lift))
                    .collect()
            })
            .collect()
    }

    /// Second partial derivatives `d^2 gamma / d t_i d t_l` at every sample,
    /// `[sample][i][l][axis]`. Pure second derivatives use the compact
    /// three-point stencil; mixed ones average the two nested estimates.
    pub fn second_derivatives(&self) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
        if self.shape.iter().any(|&s| s < 3) {
            return Err(Error::InvalidInput("second derivatives need at least 3 samples per axis".into()));
        }
        let first = self.first_derivatives()?;
        let n = self.n();
        let mut out = vec![vec![vec![vec![0.0; self.d]; n]; n]; self.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            for i in 0..n {
                slot[i][i] = self.pure_second(flat, i)?;
            }
        }
        for i in 0..n {
            for l in (i + 1)..n {
                for flat in 0..self.len() {
                    let diff_i = |a: usize, b: usize| -> Result<Vec<f64>> {
                        Ok(first[b][i].iter().zip(&first[a][i]).map(|(p, q)| p - q).collect())
                    };
                    let diff_l = |a: usize, b: usize| -> Result<Vec<f64>> {
                        Ok(first[b][l].iter().zip(&first[a][l]).map(|(p, q)| p - q).collect())
                    };
                    let a = self.derivative_along(flat, l, &diff_i)?;
                    let b = self.derivative_along(flat, i, &diff_l)?;
                    let mixed: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
                    out[flat][i][l] = mixed.clone();
                    out[flat][l][i] = mixed;
                }
            }
        }
        Ok(out)
    }

    fn pure_second(&self, flat: usize, axis: usize) -> Result<Vec<f64>> {
        let h = self.spacing(axis);
        // at a free end, reuse the stencil centered on the inner neighbor
        let center = match (self.neighbor(flat, axis, -1), self.neighbor(flat, axis, 1)) {
            (Some(_), Some(_)) => flat,
            (None, Some(f)) => f,
            (Some(b), None) => b,
            (None, None) => unreachable!("at least three samples per axis"),
        };
        let up = self.lift(center, self.neighbor(center, axis, 1).expect("interior"))?;
        let down = self.lift(center, self.neighbor(center, axis, -1).expect("interior"))?;
        Ok(up.iter().zip(&down).map(|(u, w)| (u + w) / (h * h)).collect())
    }

    /// Midpoint-rule atoms `(gamma(t), d gamma / d t_1, ..., d gamma / d t_n)`
    /// with weight `coeff` times the parameter cell volume.
    pub fn atoms(&self) -> Result<Vec<Atom>> {
        let weight = self.coeff * self.shape.iter().map(|&s| 1.0 / s as f64).product::<f64>();
        let derivs = self.first_derivatives()?;
        self.samples
            .iter()
            .zip(derivs)
            .map(|(x, fibers)| Ok(Atom::new(PhasePoint::new(x.clone(), fibers)?, weight)))
            .collect()
    }
}

impl CellChain {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self { cells }
    }

    pub fn total_coefficient(&self) -> f64 {
        self.cells.iter().map(|c| c.coeff).sum()
    }
}

/// Quadrature measure of a positive chain: one atom per sample of each cell.
pub fn measure_from_chain(chain: &CellChain) -> Result<AtomicMeasure> {
    let first = chain
        .cells
        .first()
        .ok_or_else(|| Error::InvalidInput("empty cell chain".into()))?;
    let (d, n) = (first.dim(), first.n());
    let mut atoms = Vec::new();
    for cell in &chain.cells {
        if cell.dim() != d || cell.n() != n {
            return Err(Error::Dimension("cells of a chain must share d and n".into()));
        }
        atoms.extend(cell.atoms()?);
    }
    AtomicMeasure::new(d, n, atoms)
}
