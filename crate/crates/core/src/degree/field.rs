//! Maps `R^n -> R^n` and axis-aligned box regions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A square map `R^n -> R^n` with a (possibly approximate) Jacobian.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Central-difference Jacobian unless overridden.
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        central_difference_jacobian(|z| self.eval(z), x)
    }
}

pub fn central_difference_jacobian<F>(f: F, x: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let fx = f(x);
    let mut jac = DMatrix::zeros(fx.len(), n);
    let mut z = x.clone();
    for j in 0..n {
        let h = f64::EPSILON.cbrt() * (1.0 + x[j].abs());
        z[j] = x[j] + h;
        let fp = f(&z);
        z[j] = x[j] - h;
        let fm = f(&z);
        z[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

type EvalFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Closure-backed vector field.
pub struct FnField {
    dim: usize,
    eval: EvalFn,
    jac: Option<JacFn>,
}

impl FnField {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(eval),
            jac: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jac {
            Some(j) => j(x),
            None => central_difference_jacobian(|z| (self.eval)(z), x),
        }
    }
}

/// `x -> A x + b`.
#[derive(Debug, Clone)]
pub struct AffineField {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineField {
    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        Self {
            matrix,
            offset: DVector::zeros(n),
        }
    }
}

impl VectorField for AffineField {
    fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

/// Open axis-aligned box `prod (lo_i, hi_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl Region {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidParameter("region of dimension 0".into()));
        }
        for i in 0..lo.len() {
            if !(hi[i] > lo[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::DegenerateRegion { axis: i });
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, -r), DVector::from_element(n, r))
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn diameter(&self) -> f64 {
        (&self.hi - &self.lo).norm()
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lo + &self.hi) * 0.5
    }

    pub fn contains_open(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| x[i] > self.lo[i] && x[i] < self.hi[i])
    }

    pub fn contains_closed(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    /// Split along `axis` at `at`, returning the lower and upper parts.
    pub fn split(&self, axis: usize, at: f64) -> Result<(Region, Region)> {
        let mut hi_a = self.hi.clone();
        hi_a[axis] = at;
        let mut lo_b = self.lo.clone();
        lo_b[axis] = at;
        Ok((
            Region::new(self.lo.clone(), hi_a)?,
            Region::new(lo_b, self.hi.clone())?,
        ))
    }

    /// Grid points on every face; `per_dim` points along each free axis.
    pub fn boundary_samples(&self, per_dim: usize) -> Vec<DVector<f64>> {
        let n = self.dim();
        let m = per_dim.max(2);
        let mut out = Vec::new();
        for axis in 0..n {
            for &fixed in &[self.lo[axis], self.hi[axis]] {
                let free: Vec<usize> = (0..n).filter(|&i| i != axis).collect();
                let total = m.pow(free.len() as u32);
                for idx in 0..total {
                    let mut x = DVector::zeros(n);
                    x[axis] = fixed;
                    let mut rem = idx;
                    for &i in &free {
                        let k = rem % m;
                        rem /= m;
                        x[i] = self.lo[i] + self.width(i) * k as f64 / (m - 1) as f64;
                    }
                    out.push(x);
                }
            }
        }
        out
    }

    /// Spacing of the face grid produced by [`Region::boundary_samples`].
    pub fn boundary_spacing(&self, per_dim: usize) -> f64 {
        let m = per_dim.max(2);
        let widest = (0..self.dim()).map(|i| self.width(i)).fold(0.0, f64::max);
        widest / (m - 1) as f64
    }

    /// First `count` points of the Halton sequence mapped into the box.
    pub fn halton_points(&self, count: usize) -> Vec<DVector<f64>> {
        let n = self.dim();
        let bases = first_primes(n);
        (1..=count)
            .map(|k| {
                DVector::from_iterator(
                    n,
                    (0..n).map(|i| self.lo[i] + self.width(i) * radical_inverse(k, bases[i])),
                )
            })
            .collect()
    }
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(n: usize) -> Vec<usize> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2;
    while primes.len() < n {
        if primes.iter().all(|p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}
