//! Coefficient fields of first-order linear systems `A^i ∂_i v + B v = h`.
//!
//! Coefficients are supplied either as first-order polynomial jets
//! (constant + linear part + optional exact remainder sampler) or as opaque
//! evaluators.  Jet derivatives are exact in the polynomial part; remainder
//! and callable derivatives fall back to second-order central differences.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, Scalar};

pub type MatrixFn<T> = Arc<dyn Fn(&[T]) -> DMatrix<T> + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> DVector<T> + Send + Sync>;

/// Matrix-valued field on `R^n`.
#[derive(Clone)]
pub enum MatrixField<T: Scalar> {

    Jet {
        constant: DMatrix<T>,
        /// `linear[j]` is the coefficient of `x^j`.
        linear: Vec<DMatrix<T>>,
        /// Exact remainder sampler; vanishes together with its stated order.
        remainder: Option<MatrixFn<T>>,
    },
    Callable {
        rows: usize,
        cols: usize,
        eval: MatrixFn<T>,
    },
}

impl<T: Scalar> MatrixField<T> {
    pub fn constant(m: DMatrix<T>) -> Self {
        MatrixField::Jet {
            constant: m,
            linear: Vec::new(),
            remainder: None,
        }
    }

    pub fn jet(constant: DMatrix<T>, linear: Vec<DMatrix<T>>) -> Self {
        MatrixField::Jet {
            constant,
            linear,
            remainder: None,
        }
    }

    pub fn jet_with_remainder(
        constant: DMatrix<T>,
        linear: Vec<DMatrix<T>>,
        remainder: MatrixFn<T>,
    ) -> Self {
        MatrixField::Jet {
            constant,
            linear,
            remainder: Some(remainder),
        }
    }

    pub fn callable(rows: usize, cols: usize, eval: MatrixFn<T>) -> Self {
        MatrixField::Callable { rows, cols, eval }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixField::Jet { constant, .. } => (constant.nrows(), constant.ncols()),
            MatrixField::Callable { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, MatrixField::Jet { .. })
    }

    pub fn eval(&self, x: &[T]) -> DMatrix<T> {
        match self {
            MatrixField::Jet {
                constant,
                linear,
                remainder,
            } => {
                let mut m = constant.clone();
                for (j, lin) in linear.iter().enumerate() {
                    m += lin * x[j];
                }
                if let Some(rem) = remainder {
                    m += rem(x);
                }
                m
            }
            MatrixField::Callable { eval, .. } => eval(x),
        }
    }

    /// `∂_dir` of the field at `x`.  Exact for the polynomial part of a jet;
    /// central differences with step `fd_step` elsewhere.
    pub fn derivative(&self, x: &[T], dir: usize, fd_step: T) -> DMatrix<T> {
        match self {
            MatrixField::Jet {
                constant,
                linear,
                remainder,
            } => {
                let (r, c) = (constant.nrows(), constant.ncols());
                let mut d = if dir < linear.len() {
                    linear[dir].clone()
                } else {
                    DMatrix::zeros(r, c)
                };
                if let Some(rem) = remainder {
                    d += central_difference(rem.as_ref(), x, dir, fd_step);
                }
                d
            }
            MatrixField::Callable { eval, .. } => {
                central_difference(eval.as_ref(), x, dir, fd_step)
            }
        }
    }
}

impl<T: Scalar> std::fmt::Debug for MatrixField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatrixField::Jet {
                constant,
                linear,
                remainder,
            } => f
                .debug_struct("MatrixField::Jet")
                .field("shape", &(constant.nrows(), constant.ncols()))
                .field("linear_terms", &linear.len())
                .field("has_remainder", &remainder.is_some())
                .finish(),
            MatrixField::Callable { rows, cols, .. } => f
                .debug_struct("MatrixField::Callable")
                .field("shape", &(rows, cols))
                .finish(),
        }
    }
}

fn central_difference<T: Scalar>(
    f: &(dyn Fn(&[T]) -> DMatrix<T> + Send + Sync),
    x: &[T],
    dir: usize,
    fd_step: T,
) -> DMatrix<T> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[dir] += fd_step;
    xm[dir] -= fd_step;
    (f(&xp) - f(&xm)) / (T::c(2.0) * fd_step)
}

/// Vector-valued field on `R^n`.
#[derive(Clone)]
pub enum VectorField<T: Scalar> {
    Jet {
        constant: DVector<T>,
        linear: Vec<DVector<T>>,
        remainder: Option<VectorFn<T>>,
    },
    Callable {
        len: usize,
        eval: VectorFn<T>,
    },
}

impl<T: Scalar> VectorField<T> {
    pub fn constant(v: DVector<T>) -> Self {
        VectorField::Jet {
            constant: v,
            linear: Vec::new(),
            remainder: None,
        }
    }

    pub fn zero(len: usize) -> Self {
        VectorField::constant(DVector::zeros(len))
    }

    pub fn callable(len: usize, eval: VectorFn<T>) -> Self {
        VectorField::Callable { len, eval }
    }

    pub fn len(&self) -> usize {
        match self {
            VectorField::Jet { constant, .. } => constant.len(),
            VectorField::Callable { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, x: &[T]) -> DVector<T> {
        match self {
            VectorField::Jet {
                constant,
                linear,
                remainder,
            } => {
                let mut v = constant.clone();
                for (j, lin) in linear.iter().enumerate() {
                    v += lin * x[j];
                }
                if let Some(rem) = remainder {
                    v += rem(x);
                }
                v
            }
            VectorField::Callable { eval, .. } => eval(x),
        }
    }
}

impl<T: Scalar> std::fmt::Debug for VectorField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VectorField::Jet { constant, .. } => f
                .debug_struct("VectorField::Jet")
                .field("len", &constant.len())
                .finish(),
            VectorField::Callable { len, .. } => f
                .debug_struct("VectorField::Callable")
                .field("len", len)
                .finish(),
        }
    }
}

/// A first-order linear system `Σ_i A^i ∂_i v + B v = h` on `R^n` with
/// `s`-dimensional unknown `v`.
#[derive(Clone)]
pub struct LinearSystemField<T: Scalar> {
    pub n: usize,
    pub s: usize,
    pub a: Vec<MatrixField<T>>,
    pub b: MatrixField<T>,
    pub h: VectorField<T>,
    /// Caller-asserted symmetry of every `A^i(x)`; verified during
    /// certification.
    pub symmetric: bool,
}

impl<T: Scalar> std::fmt::Debug for LinearSystemField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSystemField")
            .field("n", &self.n)
            .field("s", &self.s)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl<T: Scalar> LinearSystemField<T> {
    pub fn new(
        n: usize,
        s: usize,
        a: Vec<MatrixField<T>>,
        b: MatrixField<T>,
        h: VectorField<T>,
        symmetric: bool,
    ) -> Result<Self> {
        if a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
                context: "number of A^i coefficient fields",
            });
        }
        for ai in &a {
            let (r, c) = ai.shape();
            if r != s || c != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: r.max(c),
                    context: "A^i coefficient shape",
                });
            }
        }
        let (br, bc) = b.shape();
        if br != s || bc != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: br.max(bc),
                context: "B coefficient shape",
            });
        }
        if h.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: h.len(),
                context: "right-hand side length",
            });
        }
        Ok(LinearSystemField {
            n,
            s,
            a,
            b,
            h,
            symmetric,
        })
    }

    /// True when every coefficient is a polynomial jet without remainder, so
    /// derivatives are exact.
    pub fn is_polynomial_jet(&self) -> bool {
        self.a.iter().all(|f| matches!(f, MatrixField::Jet { remainder: None, .. }))
            && matches!(self.b, MatrixField::Jet { remainder: None, .. })
    }

    /// The 1-D regular-singular model system `(x − x0) u' + b u = h`.
    pub fn singular_ode(x0: T, b: T) -> Self {
        let a1 = MatrixField::jet(
            DMatrix::from_row_slice(1, 1, &[-x0]),
            vec![DMatrix::from_row_slice(1, 1, &[T::one()])],
        );
        let bb = MatrixField::constant(DMatrix::from_row_slice(1, 1, &[b]));
        LinearSystemField::new(
            1,
            1,
            vec![a1],
            bb,
            VectorField::constant(DVector::from_row_slice(&[T::one()])),
            true,
        )
        .expect("model system dimensions")
    }

    /// The 2-D manufactured SSP system `A^i = x^i I, B = b0 I` with
    /// `Q0 = (2 b0 − 2) I` and `Q1 = 2 I`.
    pub fn manufactured_2d(b0: T) -> Self {
        let zero = DMatrix::zeros(1, 1);
        let one = DMatrix::from_row_slice(1, 1, &[T::one()]);
        let a1 = MatrixField::jet(zero.clone(), vec![one.clone(), zero.clone()]);
        let a2 = MatrixField::jet(zero.clone(), vec![zero.clone(), one.clone()]);
        let b = MatrixField::constant(DMatrix::from_row_slice(1, 1, &[b0]));
        LinearSystemField::new(
            2,
            1,
            vec![a1, a2],
            b,
            VectorField::zero(1),
            true,
        )
        .expect("model system dimensions")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_eval_and_exact_derivative() {
        let f = MatrixField::jet(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            vec![DMatrix::from_row_slice(1, 1, &[2.0])],
        );
        assert_eq!(f.eval(&[3.0])[(0, 0)], 7.0);
        assert_eq!(f.derivative(&[3.0], 0, 1e-3)[(0, 0)], 2.0);
    }

    #[test]
    fn callable_derivative_matches_jet() {
        let jet = MatrixField::jet(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            vec![DMatrix::from_row_slice(1, 1, &[1.0])],
        );
        let call: MatrixField<f64> = MatrixField::callable(
            1,
            1,
            Arc::new(|x: &[f64]| DMatrix::from_row_slice(1, 1, &[x[0]])),
        );
        let d_jet = jet.derivative(&[0.4], 0, 1e-4)[(0, 0)];
        let d_call = call.derivative(&[0.4], 0, 1e-4)[(0, 0)];
        assert!((d_jet - d_call).abs() < 1e-10);
    }

    #[test]
    fn dimension_validation() {
        let a = vec![MatrixField::constant(DMatrix::<f64>::zeros(2, 2))];
        let b = MatrixField::constant(DMatrix::zeros(1, 1));
        let h = VectorField::zero(1);
        assert!(LinearSystemField::new(1, 1, a, b, h, true).is_err());
    }
}
