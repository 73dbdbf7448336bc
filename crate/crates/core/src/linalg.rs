//! Small dense matrices and a symmetric eigensolver.
//!
//! Everything in this crate works on networks of a handful of nodes, so a
//! row-major `Vec<f64>` and cyclic Jacobi rotations are all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n, "matrix rows must have length {n}");
            data.extend_from_slice(r);
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| math::dot(self.row(i), x)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)]).sum())
            .collect()
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Worst deviation from being doubly stochastic: the largest of
    /// `|row sum − 1|`, `|column sum − 1|` and `max(0, −entry)`.
    pub fn stochasticity_defect(&self) -> f64 {
        let rows = self.row_sums().into_iter().map(|s| (s - 1.0).abs());
        let cols = self.col_sums().into_iter().map(|s| (s - 1.0).abs());
        let neg = self.data.iter().map(|&v| (-v).max(0.0));
        rows.chain(cols).chain(neg).fold(0.0, f64::max)
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        math::dot(x, &self.mul_vec(x))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a symmetric matrix.
///
/// Columns of `vectors` are orthonormal eigenvectors; `values` are in the
/// order the Jacobi sweeps leave them (unsorted).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

impl SymmetricEigen {
    /// Cyclic Jacobi. Only the upper triangle of `a` is read.
    pub fn new(a: &Matrix) -> Self {
        let n = a.dim();
        let mut m = a.clone();
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        let mut v = Matrix::identity(n);
        let scale = m.data.iter().fold(0.0f64, |s, x| s.max(x.abs()));

        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if off == 0.0 || math::sqrt(off) <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + math::hypot(theta, 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / math::hypot(t, 1.0);
                    let s = t * c;

                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }

        SymmetricEigen {
            values: (0..n).map(|i| m[(i, i)]).collect(),
            vectors: v,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `f(A) = V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.dim();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// `e^{At}`.
    pub fn exp(&self, t: f64) -> Matrix {
        self.map(|l| math::exp(l * t))
    }

    /// Coordinates in the eigenbasis: `Vᵀ x`.
    pub fn to_modal(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| (0..n).map(|i| self.vectors[(i, k)] * x[i]).sum())
            .collect()
    }

    /// Back to node coordinates: `V y`.
    pub fn from_modal(&self, y: &[f64]) -> Vec<f64> {
        self.vectors.mul_vec(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(seed: u64, n: usize) -> Matrix {
        // Deterministic LCG; avoids a rand dependency in unit tests.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        for seed in 0..20 {
            let a = random_symmetric(seed, 6);
            let eig = SymmetricEigen::new(&a);
            let back = eig.map(|l| l);
            assert!(a.max_abs_diff(&back) < 1e-13, "seed {seed}");
            let vtv = eig.vectors.transpose().mul(&eig.vectors);
            assert!(vtv.max_abs_diff(&Matrix::identity(6)) < 1e-13);
        }
    }

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let a = Matrix::from_rows(&[[3.0, 0.0], [0.0, -1.0]]);
        let eig = SymmetricEigen::new(&a);
        assert_eq!(eig.values, vec![3.0, -1.0]);
        assert_eq!(eig.vectors, Matrix::identity(2));
    }

    #[test]
    fn modal_round_trip() {
        let a = random_symmetric(7, 5);
        let eig = SymmetricEigen::new(&a);
        let x = [1.0, -2.0, 0.5, 4.0, 3.0];
        let back = eig.from_modal(&eig.to_modal(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
