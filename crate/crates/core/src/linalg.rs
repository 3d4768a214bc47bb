//! Dense and matrix-free linear-algebra helpers shared across the crate.
//!
//! Eigenvalue routines always symmetrize their argument as `(M + Mᵀ)/2` to
//! absorb round-off before calling the symmetric eigensolver.  Underdetermined
//! systems are solved in the minimum-Euclidean-norm sense through an SVD so
//! that results are deterministic and reproducible.

use nalgebra::{DMatrix, DVector};

use crate::Scalar;

/// `(M + Mᵀ)/2`.
pub fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::c(0.5);
    (m + m.transpose()) * half
}

/// Eigenvalues of the symmetrized matrix, sorted ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    let sym = symmetrize(m);
    let mut eigs: Vec<T> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("non-finite eigenvalue"));
    eigs
}

/// Smallest eigenvalue of the symmetrized matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    symmetric_eigenvalues(m)[0]
}

/// Signature `(p, q)` of a symmetric matrix: counts of eigenvalues above and
/// below `zero_tol` in magnitude.
pub fn signature<T: Scalar>(m: &DMatrix<T>, zero_tol: T) -> (usize, usize) {
    let eigs = symmetric_eigenvalues(m);
    let p = eigs.iter().filter(|&&e| e > zero_tol).count();
    let q = eigs.iter().filter(|&&e| e < -zero_tol).count();
    (p, q)
}

/// Singular values sorted descending.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    let mut sv: Vec<T> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("non-finite singular value"));
    sv
}

/// Numerical rank with absolute singular-value cutoff `eps`.
pub fn rank<T: Scalar>(m: &DMatrix<T>, eps: T) -> usize {
    singular_values(m).iter().filter(|&&s| s > eps).count()
}

/// Minimum-norm least-squares solution of `A x = b` via SVD.
pub fn min_norm_solve<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, eps: T) -> DVector<T> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, eps).expect("SVD solve")
}

/// Orthonormal basis of the (right) nullspace of `A`, i.e. the right singular
/// vectors whose singular values fall at or below `eps`.  Each basis vector is
/// oriented so that its first entry of magnitude above `1e-12` is positive.
pub fn nullspace<T: Scalar>(a: &DMatrix<T>, eps: T) -> Vec<DVector<T>> {
    let mut svd = a.clone().svd(true, true);
    svd.sort_by_singular_values();
    let v_t = svd.v_t.expect("SVD v_t");
    let sv = svd.singular_values;
    let ncols = a.ncols();
    let thin = sv.len();
    let small = sv.iter().filter(|&&s| s <= eps).count();
    let target = small + ncols.saturating_sub(thin);

    let mut basis = Vec::new();
    for i in 0..thin {
        if sv[i] <= eps {
            basis.push(orient(v_t.row(i).transpose()));
        }
    }
    // When rows < cols the thin SVD misses part of the nullspace; complete it
    // by Gram-Schmidt of coordinate vectors against the thin singular vectors.
    if target > basis.len() {
        let mut have: Vec<DVector<T>> = (0..thin).map(|i| v_t.row(i).transpose()).collect();
        for j in 0..ncols {
            if basis.len() >= target {
                break;
            }
            let mut cand: DVector<T> = DVector::zeros(ncols);
            cand[j] = T::one();
            for _ in 0..2 {
                for v in &have {
                    let proj = v.dot(&cand);
                    cand -= v * proj;
                }
            }
            let nrm = cand.norm();
            if nrm > T::c(1e-8) {
                let cand = cand / nrm;
                have.push(cand.clone());
                basis.push(orient(cand));
            }
        }
    }
    basis
}

fn orient<T: Scalar>(v: DVector<T>) -> DVector<T> {
    for i in 0..v.len() {
        if v[i].abs() > T::c(1e-12) {
            if v[i] < T::zero() {
                return -v;
            }
            break;
        }
    }
    v
}

/// A sparse matrix in compressed row form, assembled row by row.
#[derive(Clone, Debug)]
pub struct SparseMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn new(ncols: usize) -> Self {
        SparseMatrix {
            nrows: 0,
            ncols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Append a row given as `(column, value)` pairs.
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn push_row(&mut self, entries: &[(usize, T)]) {
        for &(c, v) in entries {
            debug_assert!(c < self.ncols);
            self.col_idx.push(c);
            self.values.push(v);
        }
        self.nrows += 1;
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn mul_vec(&self, x: &DVector<T>, out: &mut DVector<T>) {
        for r in 0..self.nrows {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            out[r] = acc;
        }
    }

    pub fn mul_transpose_vec(&self, y: &DVector<T>, out: &mut DVector<T>) {
        out.fill(T::zero());
        for r in 0..self.nrows {
            let yr = y[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k] * yr;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }
}

/// CGLS: conjugate gradient on the normal equations `AᵀA x = Aᵀ b`, run
/// matrix-free.  Returns the solution and the final residual `|Ax − b|`.
pub fn cgls<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &DVector<T>,
    rel_tol: T,
    max_iter: usize,
) -> (DVector<T>, T) {
    let mut x = DVector::zeros(a.ncols);
    let mut r = b.clone();
    let mut s = DVector::zeros(a.ncols);
    a.mul_transpose_vec(&r, &mut s);
    let mut p = s.clone();
    let mut gamma = s.norm_squared();
    let gamma0 = gamma;
    let mut q = DVector::zeros(a.nrows);
    if gamma0 == T::zero() {
        return (x, b.norm());
    }
    for _ in 0..max_iter {
        a.mul_vec(&p, &mut q);
        let qn = q.norm_squared();
        if qn == T::zero() {
            break;
        }
        let alpha = gamma / qn;
        x.axpy(alpha, &p, T::one());
        r.axpy(-alpha, &q, T::one());
        a.mul_transpose_vec(&r, &mut s);
        let gamma_new = s.norm_squared();
        if gamma_new <= rel_tol * rel_tol * gamma0 {
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p = &s + &p * beta;
    }
    let mut ax = DVector::zeros(a.nrows);
    a.mul_vec(&x, &mut ax);
    let res = (&ax - b).norm();
    (x, res)
}
