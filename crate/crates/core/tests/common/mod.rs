#![allow(dead_code)]

use inclusion_degree::degree::{FnField, Region};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Coefficients of `g(x) = M q(x) + eta c(x)` with `q_i(x) = prod_r (x_i - r)` and
/// `c_i(x) = sum_{a <= b} gamma_iab x_a x_b`.
#[derive(Debug, Clone)]
pub struct PolyMap {
    pub roots: Vec<Vec<f64>>,
    pub m: DMatrix<f64>,
    pub eta: f64,
    pub gamma: Vec<Vec<(usize, usize, f64)>>,
}

impl PolyMap {
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let roots = (0..n).map(|_| separated_roots(rng)).collect();
        let m = loop {
            let m: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            if m.determinant().abs() > 0.3 {
                break m;
            }
        };
        let mut gamma = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::new();
            for a in 0..n {
                for b in a..n {
                    row.push((a, b, rng.gen_range(-1.0..1.0)));
                }
            }
            gamma.push(row);
        }
        Self {
            roots,
            m,
            eta: rng.gen_range(0.0..0.1),
            gamma,
        }
    }

    pub fn dim(&self) -> usize {
        self.roots.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let q = DVector::from_fn(n, |i, _| self.roots[i].iter().map(|r| x[i] - r).product());
        let c = DVector::from_fn(n, |i, _| self.gamma[i].iter().map(|&(a, b, g)| g * x[a] * x[b]).sum());
        &self.m * q + c * self.eta
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut dq = DMatrix::zeros(n, n);
        for i in 0..n {
            let r = &self.roots[i];
            let mut d = 0.0;
            for k in 0..r.len() {
                d += r.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| x[i] - v).product::<f64>();
            }
            dq[(i, i)] = d;
        }
        let mut dc = DMatrix::zeros(n, n);
        for i in 0..n {
            for &(a, b, g) in &self.gamma[i] {
                dc[(i, a)] += g * x[b];
                dc[(i, b)] += g * x[a];
            }
        }
        &self.m * dq + dc * self.eta
    }

    pub fn field(&self) -> FnField {
        let (e, j) = (self.clone(), self.clone());
        FnField::new(self.dim(), move |x| e.eval(x)).with_jacobian(move |x| j.jacobian(x))
    }
}

/// One to three roots in `[-0.8, 0.8]`, pairwise at least 0.2 apart.
fn separated_roots(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(1..=3);
    loop {
        let mut r: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.8..0.8)).collect();
        r.sort_by(f64::total_cmp);
        if r.windows(2).all(|w| w[1] - w[0] >= 0.2) {
            return r;
        }
    }
}

/// Degree of the piecewise-linear interpolant of `g` on the Kuhn triangulation of a
/// uniform grid with `cells` cells per axis, at the target `y`.
pub fn pl_degree(g: &dyn Fn(&DVector<f64>) -> DVector<f64>, region: &Region, cells: usize, y: &DVector<f64>) -> i64 {
    let n = region.dim();
    let stride: Vec<usize> = (0..n).map(|k| (cells + 1).pow(k as u32)).collect();
    let total = (cells + 1).pow(n as u32);
    let h: Vec<f64> = (0..n).map(|k| region.width(k) / cells as f64).collect();
    let vertex = |idx: &[usize]| DVector::from_fn(n, |k, _| region.lo()[k] + idx[k] as f64 * h[k]);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for v in idx.iter_mut() {
            *v = rem % (cells + 1);
            rem /= cells + 1;
        }
        values.push(g(&vertex(&idx)) - y);
    }
    let perms = permutations(n);
    let mut degree = 0i64;
    let cell_count = cells.pow(n as u32);
    let mut corner = vec![0usize; n];
    for flat in 0..cell_count {
        let mut rem = flat;
        for v in corner.iter_mut() {
            *v = rem % cells;
            rem /= cells;
        }
        let base: usize = (0..n).map(|k| corner[k] * stride[k]).sum();
        for (perm, parity) in &perms {
            let mut at = base;
            let v0 = &values[base];
            let mut cols = DMatrix::zeros(n, n);
            for (k, &axis) in perm.iter().enumerate() {
                at += stride[axis];
                cols.set_column(k, &(&values[at] - v0));
            }
            let lu = cols.lu();
            let Some(bary) = lu.solve(&(-v0)) else { continue };
            if bary.iter().all(|b| *b > 0.0) && bary.sum() < 1.0 {
                let det = lu.determinant();
                degree += i64::from(parity * det.signum() as i8);
            }
        }
    }
    degree
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, i8)>) {
        if left.is_empty() {
            let p = prefix.clone();
            let mut inversions = 0;
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            out.push((p, if inversions % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Tiny generic offset keeping the oracle target off simplex faces.
pub fn generic_offset(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1e-7..1e-7))
}
