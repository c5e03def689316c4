//! Small dense linear algebra: Cholesky for Gram systems, partially pivoted
//! LU for shooting Jacobians.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| libm::fabs(self[(i, j)] - self[(j, i)]) <= tol))
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| libm::fmax(m, libm::fabs(*v)))
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `A = L Lᵀ` for symmetric positive-definite `A`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: SquareMatrix,
}

impl Cholesky {
    pub fn new(a: &SquareMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::Degenerate(alloc::format!("matrix is not positive definite (pivot {j} = {d:e})")));
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.l;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[(k, i)] * b[k];
            }
            b[i] = s / l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Smallest eigenvalue of `A` by inverse iteration.
    fn min_eigenvalue(&self, iters: usize) -> f64 {
        let n = self.dim();
        let mut v = start_vector(n);
        let mut lambda = 0.0;
        for _ in 0..iters {
            let mut w = v.clone();
            self.solve_in_place(&mut w);
            let norm = norm2(&w);
            if norm == 0.0 || !norm.is_finite() {
                return 0.0;
            }
            lambda = dot(&v, &w);
            v = w.iter().map(|x| x / norm).collect();
        }
        if lambda > 0.0 {
            1.0 / lambda
        } else {
            0.0
        }
    }
}

/// Largest eigenvalue of symmetric `a` by power iteration.
fn max_eigenvalue(a: &SquareMatrix, iters: usize) -> f64 {
    let mut v = start_vector(a.dim());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = a.mul_vec(&v);
        let norm = norm2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        lambda = dot(&v, &w);
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// 2-norm condition number estimate `λ_max / λ_min` of an SPD matrix.
///
/// Power and inverse iteration from a fixed start vector; the estimate is
/// deterministic and accurate to a few digits, which is all a conditioning
/// warning needs.
pub fn spd_condition_estimate(a: &SquareMatrix, chol: &Cholesky) -> f64 {
    const ITERS: usize = 60;
    let hi = max_eigenvalue(a, ITERS);
    let lo = chol.min_eigenvalue(ITERS);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0) / (n as f64 + 1.0)).collect();
    let norm = norm2(&raw);
    raw.into_iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `P A = L U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: SquareMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &SquareMatrix) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = a.max_abs() * f64::EPSILON * n.max(1) as f64;
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, libm::fabs(lu[(i, k)])))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > tiny) {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let t = lu[(k, j)];
                        lu[(i, j)] -= f * t;
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}
