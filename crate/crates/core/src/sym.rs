//! Index bookkeeping for symmetric 2- and 3-tensors in dimensions 2 and 3.
//!
//! Fully symmetric cubic tensors are stored as coefficient vectors over a
//! fixed multiset ordering; for n = 3 the ordering matches the component
//! vectors used by the derivative-constraint matrices:
//! `[111, 222, 333, 112, 113, 223, 122, 133, 233, 123]`.

use nalgebra::DMatrix;

use crate::Scalar;

/// Canonical ordering of cubic multi-indices (0-based, sorted within each).
pub fn cubic_indices(n: usize) -> &'static [[usize; 3]] {
    match n {
        2 => &[[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]],
        3 => &[
            [0, 0, 0],
            [1, 1, 1],
            [2, 2, 2],
            [0, 0, 1],
            [0, 0, 2],
            [1, 1, 2],
            [0, 1, 1],
            [0, 2, 2],
            [1, 2, 2],
            [0, 1, 2],
        ],
        _ => panic!("cubic tensors only implemented for n = 2, 3"),
    }
}

/// Dimension of the space of symmetric cubics: 4 for n = 2, 10 for n = 3.
pub fn cubic_dim(n: usize) -> usize {
    cubic_indices(n).len()
}

/// Position of the multiset `{i, j, k}` in the canonical ordering.
pub fn cubic_position(n: usize, i: usize, j: usize, k: usize) -> usize {
    let mut key = [i, j, k];
    key.sort_unstable();
    cubic_indices(n)
        .iter()
        .position(|idx| *idx == key)
        .expect("cubic index in range")
}

/// A fully symmetric cubic tensor `A^{ijk}` on `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cubic<T: Scalar> {
    pub n: usize,
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Cubic<T> {
    pub fn zeros(n: usize) -> Self {
        Cubic {
            n,
            coeffs: vec![T::zero(); cubic_dim(n)],
        }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), cubic_dim(n));
        Cubic { n, coeffs }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.coeffs[cubic_position(self.n, i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let p = cubic_position(self.n, i, j, k);
        self.coeffs[p] = v;
    }

    /// The slice matrix `[A^{kij}]_{ij}` for fixed first index `k`.
    pub fn slice(&self, k: usize) -> DMatrix<T> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.get(k, i, j))
    }

    /// Frobenius-style pairing `⟨A^k, M⟩ = Σ_{ij} A^{kij} M_{ij}` of one slice
    /// with a symmetric matrix.
    pub fn pair_slice(&self, k: usize, m: &DMatrix<T>) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(k, i, j) * m[(i, j)];
            }
        }
        acc
    }

    pub fn norm(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    let v = self.get(i, j, k);
                    acc += v * v;
                }
            }
        }
        acc.sqrt()
    }
}

/// Upper-triangle pair ordering of symmetric matrices on `R^n`.
pub fn sym_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i..n {
            pairs.push((i, j));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_positions_cover_all_permutations() {
        for n in [2usize, 3] {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let p = cubic_position(n, i, j, k);
                        assert_eq!(p, cubic_position(n, k, j, i));
                        assert_eq!(p, cubic_position(n, j, i, k));
                    }
                }
            }
        }
    }

    #[test]
    fn slices_share_symmetric_coefficients() {
        let mut a: Cubic<f64> = Cubic::zeros(3);
        a.set(0, 1, 2, 1.0);
        a.set(0, 0, 0, -0.6);
        let s0 = a.slice(0);
        let s1 = a.slice(1);
        assert_eq!(s0[(1, 2)], 1.0);
        assert_eq!(s0[(2, 1)], 1.0);
        assert_eq!(s1[(0, 2)], 1.0);
        assert_eq!(s0[(0, 0)], -0.6);
    }
}
