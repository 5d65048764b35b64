//! Objective functions `f: ℝⁿ → ℝ` with user-supplied gradients.

use std::cell::Cell;

use crate::linalg::{dot, CsrMatrix};

/// A smooth objective. Implementations must be deterministic: the same `x`
/// always produces the same value and gradient.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `grad` and returns `f(x)`.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_grad(x, grad)
    }
}

/// Counts evaluations made through it. One per solver run.
pub struct Evaluator<'a> {
    inner: &'a dyn Objective,
    value_calls: Cell<usize>,
    grad_calls: Cell<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        Self { inner, value_calls: Cell::new(0), grad_calls: Cell::new(0) }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_calls.set(self.value_calls.get() + 1);
        self.inner.value(x)
    }

    /// Returns `(f(x), ∇f(x))`.
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.value_calls.set(self.value_calls.get() + 1);
        self.grad_calls.set(self.grad_calls.get() + 1);
        let mut g = vec![0.0; x.len()];
        let f = self.inner.value_grad(x, &mut g);
        (f, g)
    }

    pub fn value_calls(&self) -> usize {
        self.value_calls.get()
    }

    pub fn grad_calls(&self) -> usize {
        self.grad_calls.get()
    }
}

/// `f(x) = ½ xᵀHx + cᵀx + constant`. Only the symmetric part of `H` counts.
#[derive(Debug, Clone)]
pub struct Quadratic {
    h: CsrMatrix,
    c: Vec<f64>,
    constant: f64,
}

impl Quadratic {
    pub fn new(h: CsrMatrix, c: Vec<f64>) -> Self {
        assert_eq!(h.nrows(), c.len());
        assert_eq!(h.ncols(), c.len());
        Self { h, c, constant: 0.0 }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn hessian(&self) -> &CsrMatrix {
        &self.h
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.c
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `½ (H + Hᵀ) x`
    fn sym_mul(&self, x: &[f64]) -> Vec<f64> {
        let hx = self.h.mul_vec(x);
        let htx = self.h.tmul_vec(x);
        hx.iter().zip(&htx).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let hx = self.h.mul_vec(x);
        0.5 * dot(x, &hx) + dot(&self.c, x) + self.constant
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let shx = self.sym_mul(x);
        for ((g, s), c) in grad.iter_mut().zip(&shx).zip(&self.c) {
            *g = s + c;
        }
        0.5 * dot(x, &shx) + dot(&self.c, x) + self.constant
    }
}

/// `f(x) = cᵀx + constant`
#[derive(Debug, Clone)]
pub struct Linear {
    c: Vec<f64>,
    constant: f64,
}

impl Linear {
    pub fn new(c: Vec<f64>) -> Self {
        Self { c, constant: 0.0 }
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.constant
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(&self.c);
        self.value(x)
    }
}

/// Wraps a closure `x, g ↦ f(x)` that fills `g` with the gradient.
pub struct FnObjective<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) -> f64> FnObjective<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.n];
        (self.f)(x, &mut g)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.f)(x, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_uses_symmetric_part() {
        // H stored as a single upper entry: f = ½(x0² + 2x1² + 3x0x1).
        let h = CsrMatrix::from_triplets(2, 2, &[0, 1, 0], &[0, 1, 1], &[1.0, 2.0, 3.0]).unwrap();
        let q = Quadratic::new(h, vec![1.0, -1.0]).with_constant(2.0);
        let x = [0.5, -1.0];
        let mut g = [0.0; 2];
        let f = q.value_grad(&x, &mut g);
        let expect_f = 0.5 * (0.25 + 2.0 - 1.5) + 0.5 + 1.0 + 2.0;
        assert!((f - expect_f).abs() < 1e-15);
        assert!((q.value(&x) - f).abs() < 1e-15);
        assert_eq!(g, [0.5 + 1.5 * -1.0 + 1.0, 2.0 * -1.0 + 1.5 * 0.5 - 1.0]);
    }

    #[test]
    fn evaluator_counts_calls() {
        let lin = Linear::new(vec![1.0, 2.0]);
        let ev = Evaluator::new(&lin);
        let _ = ev.value(&[1.0, 1.0]);
        let (f, g) = ev.eval(&[1.0, 0.0]);
        assert_eq!((f, g), (1.0, vec![1.0, 2.0]));
        assert_eq!(ev.value_calls(), 2);
        assert_eq!(ev.grad_calls(), 1);
    }
}
