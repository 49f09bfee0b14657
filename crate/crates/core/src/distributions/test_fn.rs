use super::MultiIndex;
use crate::geometry::{FourierForm, PhasePoint, TrigPolynomial};
use crate::numeric::binomial;
use crate::{Error, Result};

/// Base step of the finite-difference fallback for `|I| = 1, 2, 3, 4`.
pub const FD_STEPS: [f64; 4] = [1e-4, 1e-3, 5e-3, 1e-2];

/// A smooth function on `T^nM` with access to its partial derivatives.
///
/// The default derivative is the finite-difference fallback, so
/// implementors only override it when closed forms are available.
pub trait TestFunction {
    fn value(&self, p: &PhasePoint) -> Result<f64>;

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        fd_derivative(&|q: &PhasePoint| self.value(q), p, index)
    }

    /// All first partials in flat coordinates.
    fn gradient(&self, p: &PhasePoint) -> Result<Vec<f64>> {
        let len = p.coordinate_count();
        (0..len)
            .map(|q| self.derivative(p, &MultiIndex::unit(len, q)))
            .collect()
    }

    fn label(&self) -> String {
        "f".into()
    }
}

fn check_index(p: &PhasePoint, index: &MultiIndex) -> Result<()> {
    if index.len() != p.coordinate_count() {
        return Err(Error::Dimension(format!(
            "multi-index of length {} at a point with {} coordinates",
            index.len(),
            p.coordinate_count()
        )));
    }
    Ok(())
}

/// Nested central differences (tensor product over coordinates, each axis
/// with its own order) at the tabulated step, followed by one Richardson
/// step between `h` and `h / 2`.
pub fn fd_derivative(
    f: &dyn Fn(&PhasePoint) -> Result<f64>,
    p: &PhasePoint,
    index: &MultiIndex,
) -> Result<f64> {
    check_index(p, index)?;
    let order = index.order() as usize;
    if order == 0 {
        return f(p);
    }
    if order > FD_STEPS.len() {
        return Err(Error::UnsupportedDerivative { order });
    }
    let h = FD_STEPS[order - 1];
    let coarse = central_difference(f, p, index, h)?;
    let fine = central_difference(f, p, index, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn central_difference(
    f: &dyn Fn(&PhasePoint) -> Result<f64>,
    p: &PhasePoint,
    index: &MultiIndex,
    h: f64,
) -> Result<f64> {
    // per axis: offsets (k/2 - j) h with weights (-1)^j C(k, j) / h^k
    let axes: Vec<(usize, u32)> = index
        .orders()
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(q, &k)| (q, k))
        .collect();
    let mut total = 0.0;
    let mut counters = vec![0u32; axes.len()];
    loop {
        let mut delta = vec![0.0; p.coordinate_count()];
        let mut weight = 1.0;
        for (slot, &(q, k)) in axes.iter().enumerate() {
            let j = counters[slot];
            delta[q] = (0.5 * k as f64 - j as f64) * h;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            weight *= sign * binomial(k as usize, j as usize) as f64 / h.powi(k as i32);
        }
        total += weight * f(&p.shifted(&delta))?;
        let mut slot = 0;
        loop {
            if slot == axes.len() {
                return Ok(total);
            }
            counters[slot] += 1;
            if counters[slot] <= axes[slot].1 {
                break;
            }
            counters[slot] = 0;
            slot += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _: &PhasePoint) -> Result<f64> {
        Ok(self.0)
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        check_index(p, index)?;
        Ok(if index.order() == 0 { self.0 } else { 0.0 })
    }

    fn label(&self) -> String {
        format!("const({})", self.0)
    }
}

impl TestFunction for FourierForm {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        self.eval(p)
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        FourierForm::derivative(self, p, index.orders())
    }

    fn label(&self) -> String {
        FourierForm::label(self)
    }
}

/// Function of the base point only.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFunction(pub TrigPolynomial);

impl TestFunction for BaseFunction {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self.0.value(p.x()))
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        check_index(p, index)?;
        let d = p.dim();
        if index.orders()[d..].iter().any(|&o| o > 0) {
            return Ok(0.0);
        }
        Ok(self.0.derivative(p.x(), &index.orders()[..d]))
    }

    fn label(&self) -> String {
        "base".into()
    }
}

/// `h(x) (c + b.V + V^T C V / 2)` with `V` the flattened fibers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrigFunction {
    pub base: TrigPolynomial,
    pub constant: f64,
    pub linear: Vec<f64>,
    pub quadratic: Vec<Vec<f64>>,
}

impl PolyTrigFunction {
    fn fiber_derivative(&self, v: &[f64], beta: &[u32]) -> f64 {
        let active: Vec<(usize, u32)> = beta
            .iter()
            .enumerate()
            .filter(|(_, &o)| o > 0)
            .map(|(r, &o)| (r, o))
            .collect();
        let order: u32 = beta.iter().sum();
        match order {
            0 => {
                let mut s = self.constant;
                for (r, &vr) in v.iter().enumerate() {
                    s += self.linear[r] * vr;
                    for (t, &vt) in v.iter().enumerate() {
                        s += 0.5 * self.quadratic[r][t] * vr * vt;
                    }
                }
                s
            }
            1 => {
                let r = active[0].0;
                let sym: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, &vt)| 0.5 * (self.quadratic[r][t] + self.quadratic[t][r]) * vt)
                    .sum();
                self.linear[r] + sym
            }
            2 => {
                let (r, t) = if active.len() == 1 {
                    (active[0].0, active[0].0)
                } else {
                    (active[0].0, active[1].0)
                };
                0.5 * (self.quadratic[r][t] + self.quadratic[t][r])
            }
            _ => 0.0,
        }
    }
}

impl TestFunction for PolyTrigFunction {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        let v: Vec<f64> = p.fibers().concat();
        Ok(self.base.value(p.x()) * self.fiber_derivative(&v, &vec![0; v.len()]))
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        check_index(p, index)?;
        let d = p.dim();
        let v: Vec<f64> = p.fibers().concat();
        let fiber = self.fiber_derivative(&v, &index.orders()[d..]);
        if fiber == 0.0 {
            return Ok(0.0);
        }
        Ok(self.base.derivative(p.x(), &index.orders()[..d]) * fiber)
    }

    fn label(&self) -> String {
        "poly-trig".into()
    }
}

fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s)).exp()
    }
}

/// Localized coordinate `(p_c - a_c) beta(|p - a|^2 / r^2)` around the
/// center `a`, with `beta(s) = exp(1 - 1/(1 - s))` on `[0, 1)`. Its gradient
/// at `a` is the unit vector `e_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoordinate {
    pub center: PhasePoint,
    pub axis: usize,
    pub radius: f64,
}

impl TestFunction for LocalCoordinate {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        let delta = self.center.displacement_to(p);
        let s = delta.iter().map(|c| c * c).sum::<f64>() / (self.radius * self.radius);
        Ok(delta[self.axis] * bump(s))
    }

    fn derivative(&self, p: &PhasePoint, index: &MultiIndex) -> Result<f64> {
        check_index(p, index)?;
        if index.order() != 1 {
            return fd_derivative(&|q: &PhasePoint| self.value(q), p, index);
        }
        let q = index.orders().iter().position(|&o| o == 1).expect("unit index");
        let delta = self.center.displacement_to(p);
        let r2 = self.radius * self.radius;
        let s = delta.iter().map(|c| c * c).sum::<f64>() / r2;
        if s >= 1.0 {
            return Ok(0.0);
        }
        let b = bump(s);
        let db = -b / ((1.0 - s) * (1.0 - s));
        let own = if q == self.axis { b } else { 0.0 };
        Ok(own + delta[self.axis] * db * 2.0 * delta[q] / r2)
    }

    fn label(&self) -> String {
        format!("local[{}]", self.axis)
    }
}

/// Arbitrary closure; derivatives by finite differences.
pub struct Closure {
    f: Box<dyn Fn(&PhasePoint) -> f64 + Send + Sync>,
    label: String,
}

impl Closure {
    pub fn new<F: Fn(&PhasePoint) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self {
            f: Box::new(f),
            label: "closure".into(),
        }
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }
}

impl TestFunction for Closure {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        Ok((self.f)(p))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Phase;

    fn point() -> PhasePoint {
        PhasePoint::new(vec![0.21, 0.67], vec![vec![0.8, -1.3]]).unwrap()
    }

    fn poly() -> PolyTrigFunction {
        let mut base = TrigPolynomial::zero(2);
        base.add_term(vec![1, -1], Phase::Sin, 0.6);
        base.add_term(vec![0, 1], Phase::Cos, 0.3);
        PolyTrigFunction {
            base,
            constant: 0.4,
            linear: vec![0.5, -0.2],
            quadratic: vec![vec![1.0, 0.3], vec![0.3, -0.7]],
        }
    }

    #[test]
    fn finite_differences_match_analytic_derivatives() {
        let f = poly();
        let p = point();
        let indices = [
            vec![1, 0, 0, 0],
            vec![0, 0, 0, 1],
            vec![1, 0, 1, 0],
            vec![0, 2, 0, 0],
            vec![1, 1, 0, 1],
            vec![2, 0, 2, 0],
        ];
        for orders in indices {
            let index = MultiIndex::new(orders.clone());
            let exact = f.derivative(&p, &index).unwrap();
            let fd = fd_derivative(&|q: &PhasePoint| f.value(q), &p, &index).unwrap();
            let scale = 1.0 + exact.abs();
            assert!((exact - fd).abs() < 1e-6 * scale, "{orders:?}: {exact} vs {fd}");
        }
    }

    #[test]
    fn fifth_order_is_unsupported() {
        let f = Closure::new(|p: &PhasePoint| p.x()[0]);
        let err = f.derivative(&point(), &MultiIndex::new(vec![5, 0, 0, 0]));
        assert!(matches!(err, Err(Error::UnsupportedDerivative { order: 5 })));
    }

    #[test]
    fn local_coordinate_gradient_is_unit_at_center() {
        let p = point();
        for axis in 0..4 {
            let f = LocalCoordinate {
                center: p.clone(),
                axis,
                radius: 0.1,
            };
            let g = f.gradient(&p).unwrap();
            for (q, gq) in g.iter().enumerate() {
                assert_eq!(*gq, if q == axis { 1.0 } else { 0.0 });
            }
            let off = p.shifted(&[0.01, 0.02, -0.03, 0.01]);
            let fd: Vec<f64> = (0..4)
                .map(|q| fd_derivative(&|x: &PhasePoint| f.value(x), &off, &MultiIndex::unit(4, q)).unwrap())
                .collect();
            let an = f.gradient(&off).unwrap();
            for q in 0..4 {
                assert!((fd[q] - an[q]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn form_fiber_derivatives_match_finite_differences() {
        let mut w = FourierForm::zero(2, 1);
        w.add_term(&[0], vec![1, 1], Phase::Cos, 0.7).unwrap();
        w.add_term(&[1], vec![2, 0], Phase::Sin, -1.1).unwrap();
        let p = point();
        let grad = w.fiber_gradient(&p).unwrap();
        for j in 0..2 {
            let h = 1e-5;
            let fd = (w.eval(&p.shifted_axis(2 + j, h)).unwrap() - w.eval(&p.shifted_axis(2 + j, -h)).unwrap())
                / (2.0 * h);
            assert!((fd - grad[0][j]).abs() < 1e-7);
            let an = TestFunction::derivative(&w, &p, &MultiIndex::unit(4, 2 + j)).unwrap();
            assert!((an - grad[0][j]).abs() < 1e-12);
        }
    }
}
