//! Certification of strong symmetric positivity and P-convexity.
//!
//! For a symmetric system the relevant objects are the quadratic forms
//!
//! ```text
//! Q0(x) = B(x) + B(x)ᵀ − Σ_i ∂_i A^i(x)                    (s × s)
//! Q1(x) = [ ∂_i A^j(x) + ∂_j A^i(x) ]_{i,j}                (ns × ns blocks)
//! ```
//!
//! and, on the boundary of a domain with outward unit normal ν, the
//! characteristic matrix `β(x) = Σ_i ν_i A^i(x)`.  Positive definiteness of
//! Q0 and Q1 everywhere is strong symmetric positivity; positive definiteness
//! of β on the whole boundary is P-convexity of the domain.

use nalgebra::{DMatrix, DVector};

use crate::field::LinearSystemField;
use crate::linalg::{min_eigenvalue, symmetrize};
use crate::{net, Error, Result, Scalar};

/// Ball domain `|x − center| < radius`.
#[derive(Clone, Debug)]
pub struct BallDomain<T: Scalar> {
    pub center: DVector<T>,
    pub radius: T,
}

impl<T: Scalar> BallDomain<T> {
    pub fn new(center: DVector<T>, radius: T) -> Result<Self> {
        if radius <= T::zero() {
            return Err(Error::DegenerateBall(radius.to_real()));
        }
        Ok(BallDomain { center, radius })
    }

    /// Outward unit normal at a boundary point.
    pub fn normal(&self, x: &DVector<T>) -> DVector<T> {
        (x - &self.center) / self.radius
    }
}

/// Outcome of sampling-based SSP certification.
#[derive(Clone, Debug)]
pub struct PositivityReport<T: Scalar> {
    pub symmetric: bool,
    /// Minimum eigenvalue of Q0 over the sample points.
    pub lambda0_min: T,
    /// Minimum eigenvalue of Q1 over the sample points.
    pub lambda1_min: T,
    /// Minimum of the Legendre-Hadamard form over the (ξ, η) net.
    pub lh_min: T,
    pub points_checked: usize,
}

impl<T: Scalar> PositivityReport<T> {
    pub fn is_ssp(&self, tol: T) -> bool {
        self.symmetric && self.lambda0_min > tol && self.lambda1_min > tol
    }
}

/// `Q0(x) = B + Bᵀ − Σ_i ∂_i A^i` at `x`.
pub fn assemble_q0<T: Scalar>(
    sys: &LinearSystemField<T>,
    x: &[T],
    fd_step: T,
) -> Result<DMatrix<T>> {
    let b = sys.b.eval(x);
    let mut q0 = &b + b.transpose();
    for i in 0..sys.n {
        q0 -= sys.a[i].derivative(x, i, fd_step);
    }
    ensure_finite(&q0, "Q0")?;
    Ok(q0)
}

/// `Q1(x)`: the `ns × ns` symmetric block matrix with `(i, j)` block
/// `∂_i A^j + ∂_j A^i`.  Exactly symmetric by construction.
pub fn assemble_q1<T: Scalar>(
    sys: &LinearSystemField<T>,
    x: &[T],
    fd_step: T,
) -> Result<DMatrix<T>> {
    let (n, s) = (sys.n, sys.s);
    let deriv: Vec<Vec<DMatrix<T>>> = (0..n)
        .map(|i| (0..n).map(|j| sys.a[i].derivative(x, j, fd_step)).collect())
        .collect();
    let mut q1 = DMatrix::zeros(n * s, n * s);
    for i in 0..n {
        for j in 0..n {
            // deriv[j][i] = ∂_i A^j, deriv[i][j] = ∂_j A^i.
            let block = &deriv[j][i] + &deriv[i][j];
            q1.view_mut((i * s, j * s), (s, s)).copy_from(&block);
        }
    }
    ensure_finite(&q1, "Q1")?;
    Ok(q1)
}

/// Boundary characteristic matrix `β(x) = Σ_i ν_i A^i(x)`.
pub fn characteristic_matrix<T: Scalar>(
    sys: &LinearSystemField<T>,
    x: &[T],
    nu: &DVector<T>,
) -> Result<DMatrix<T>> {
    if nu.len() != sys.n {
        return Err(Error::DimensionMismatch {
            expected: sys.n,
            got: nu.len(),
            context: "normal vector length",
        });
    }
    let norm = nu.norm();
    if (norm - T::one()).abs() > T::c(1e-8) {
        return Err(Error::NonUnitNormal(norm.to_real()));
    }
    let mut beta = DMatrix::zeros(sys.s, sys.s);
    for i in 0..sys.n {
        beta += sys.a[i].eval(x) * nu[i];
    }
    Ok(beta)
}

/// Default finite-difference step for coefficient derivatives.
pub fn default_fd_step<T: Scalar>() -> T {
    T::c(1e-5)
}

/// Certify strong symmetric positivity over a sample set.
///
/// `symmetric` is true iff every `A^i` is symmetric within `tol` at every
/// sample; the minima are taken over the samples, and `lh_min` over a
/// deterministic tensor net of unit pairs (ξ, η) with at least 64 points on
/// each sphere.
pub fn check_ssp<T: Scalar>(
    sys: &LinearSystemField<T>,
    samples: &[Vec<T>],
    tol: T,
) -> Result<PositivityReport<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let fd = default_fd_step::<T>();
    let mut symmetric = true;
    let mut lambda0_min = T::c(f64::INFINITY);
    let mut lambda1_min = T::c(f64::INFINITY);
    let mut lh_min = T::c(f64::INFINITY);
    let xi_net = net::unit_sphere::<T>(sys.s, 64);
    let eta_net = net::unit_sphere::<T>(sys.n, 64);
    for x in samples {
        for ai in &sys.a {
            let m = ai.eval(x);
            if (&m - m.transpose()).abs().max() > tol {
                symmetric = false;
            }
        }
        let q0 = assemble_q0(sys, x, fd)?;
        let q1 = assemble_q1(sys, x, fd)?;
        let e0 = min_eigenvalue(&symmetrize(&q0));
        let e1 = min_eigenvalue(&q1);
        if !e0.is_finite() || !e1.is_finite() {
            return Err(Error::NonFinite("eigenvalue"));
        }
        lambda0_min = lambda0_min.min(e0);
        lambda1_min = lambda1_min.min(e1);
        lh_min = lh_min.min(legendre_hadamard_min(&q1, sys.n, sys.s, &xi_net, &eta_net));
    }
    Ok(PositivityReport {
        symmetric,
        lambda0_min,
        lambda1_min,
        lh_min,
        points_checked: samples.len(),
    })
}

/// Minimum of `Σ_{ij} η^i η^j ξᵀ (Q1)_{ij} ξ` over the supplied unit nets.
fn legendre_hadamard_min<T: Scalar>(
    q1: &DMatrix<T>,
    n: usize,
    s: usize,
    xi_net: &[DVector<T>],
    eta_net: &[DVector<T>],
) -> T {
    let mut min = T::c(f64::INFINITY);
    for eta in eta_net {
        for xi in xi_net {
            // Rank-one vector (η^1 ξ, ..., η^n ξ) contracted with Q1.
            let mut z = DVector::zeros(n * s);
            for i in 0..n {
                for a in 0..s {
                    z[i * s + a] = eta[i] * xi[a];
                }
            }
            let val = (q1 * &z).dot(&z);
            min = min.min(val);
        }
    }
    min
}

/// P-convexity check for a ball: returns `(true, min boundary eigenvalue)` iff
/// the smallest eigenvalue of the symmetrized β over the deterministic
/// boundary net exceeds `tol`.
pub fn check_p_convex<T: Scalar>(
    sys: &LinearSystemField<T>,
    ball: &BallDomain<T>,
    boundary_samples: usize,
    tol: T,
) -> Result<(bool, T)> {
    if ball.radius <= T::zero() {
        return Err(Error::DegenerateBall(ball.radius.to_real()));
    }
    let count = boundary_samples.max(2 * sys.n);
    let mut min_eig = T::c(f64::INFINITY);
    for dir in net::unit_sphere::<T>(sys.n, count) {
        let x = &ball.center + &dir * ball.radius;
        let beta = characteristic_matrix(sys, x.as_slice(), &dir)?;
        min_eig = min_eig.min(min_eigenvalue(&symmetrize(&beta)));
    }
    Ok((min_eig > tol, min_eig))
}

fn ensure_finite<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{MatrixField, VectorField};
    use std::sync::Arc;

    type Mat2 = nalgebra::DMatrix<f64>;

    fn ode(b: f64) -> LinearSystemField<f64> {
        LinearSystemField::singular_ode(0.0, b)
    }

    #[test]
    fn q0_of_model_ode_is_2b_minus_1() {
        // B + Bᵀ − ∂A = 2·2 − 1 = 3 at any x.
        let sys = ode(2.0);
        for x in [-0.7, 0.0, 0.9] {
            let q0 = assemble_q0(&sys, &[x], 1e-5).unwrap();
            assert!((q0[(0, 0)] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn q0_constant_coefficients_vanishes() {
        let a = MatrixField::constant(Mat2::identity(2, 2));
        let b = MatrixField::constant(Mat2::zeros(2, 2));
        let sys =
            LinearSystemField::new(1, 2, vec![a], b, VectorField::zero(2), true).unwrap();
        let q0 = assemble_q0(&sys, &[0.3], 1e-5).unwrap();
        assert!(q0.abs().max() < 1e-12);
    }

    #[test]
    fn q0_quadratic_coefficient_at_one() {
        // A¹(x) = x² I₂, B = I₂ at x = 1: Q0 = 2I − 2I = 0 (hand evaluation);
        // the callable route must agree with the exact jet route to O(h²).
        let a_call = MatrixField::callable(
            2,
            2,
            Arc::new(|x: &[f64]| Mat2::identity(2, 2) * (x[0] * x[0])),
        );
        let b = MatrixField::constant(Mat2::identity(2, 2));
        let sys = LinearSystemField::new(1, 2, vec![a_call], b, VectorField::zero(2), true)
            .unwrap();
        let q0 = assemble_q0(&sys, &[1.0], 1e-5).unwrap();
        assert!(q0.abs().max() < 1e-9, "Q0 = {q0}");
    }

    #[test]
    fn q1_of_model_ode_is_2() {
        let sys = ode(2.0);
        let q1 = assemble_q1(&sys, &[0.5], 1e-5).unwrap();
        assert!((q1[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q1_linear_2d_is_2_identity() {
        let sys = LinearSystemField::manufactured_2d(3.0);
        let q1 = assemble_q1(&sys, &[0.2, -0.4], 1e-5).unwrap();
        assert!((&q1 - Mat2::identity(2, 2) * 2.0).abs().max() < 1e-12);
    }

    #[test]
    fn check_ssp_on_model_ode() {
        let sys = ode(2.0);
        let samples: Vec<Vec<f64>> = net::interval(-1.0, 1.0, 21)
            .into_iter()
            .map(|x| vec![x])
            .collect();
        let rep = check_ssp(&sys, &samples, 1e-10).unwrap();
        assert!(rep.symmetric);
        assert!((rep.lambda0_min - 3.0).abs() < 1e-10);
        assert!((rep.lambda1_min - 2.0).abs() < 1e-10);
        assert!(rep.is_ssp(1e-10));
    }

    #[test]
    fn check_ssp_below_threshold() {
        // b = 1/4 gives Q0 = 2b − 1 = −1/2 < 0.
        let sys = ode(0.25);
        let samples = vec![vec![0.0]];
        let rep = check_ssp(&sys, &samples, 1e-10).unwrap();
        assert!((rep.lambda0_min + 0.5).abs() < 1e-12);
        assert!(!rep.is_ssp(0.0));
    }

    #[test]
    fn non_symmetric_coefficient_is_flagged() {
        let a = MatrixField::constant(Mat2::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let b = MatrixField::constant(Mat2::identity(2, 2) * 5.0);
        let sys =
            LinearSystemField::new(1, 2, vec![a], b, VectorField::zero(2), false).unwrap();
        let rep = check_ssp(&sys, &[vec![0.0]], 1e-10).unwrap();
        assert!(!rep.symmetric);
        assert!(!rep.is_ssp(0.0));
    }

    #[test]
    fn characteristic_matrix_of_ode() {
        // β at the right endpoint x2 with ν = +1 is x2 − x0; positive iff
        // the singular point sits left of x2.
        let sys: LinearSystemField<f64> = LinearSystemField::singular_ode(0.3, 2.0);
        let nu = DVector::from_row_slice(&[1.0]);
        let beta = characteristic_matrix(&sys, &[1.0], &nu).unwrap();
        assert!((beta[(0, 0)] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn characteristic_matrix_basis_vector() {
        let sys: LinearSystemField<f64> = LinearSystemField::manufactured_2d(3.0);
        let nu = DVector::from_row_slice(&[1.0, 0.0]);
        let beta = characteristic_matrix(&sys, &[0.7, 0.1], &nu).unwrap();
        assert!((beta[(0, 0)] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn characteristic_matrix_diagonal_direction() {
        // A¹ = A² = I, ν = (1/√2, 1/√2) → β = √2 I.
        let a1 = MatrixField::constant(Mat2::identity(2, 2));
        let a2 = MatrixField::constant(Mat2::identity(2, 2));
        let b = MatrixField::constant(Mat2::zeros(2, 2));
        let sys =
            LinearSystemField::new(2, 2, vec![a1, a2], b, VectorField::zero(2), true).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let nu = DVector::from_row_slice(&[inv_sqrt2, inv_sqrt2]);
        let beta = characteristic_matrix(&sys, &[0.0, 0.0], &nu).unwrap();
        assert!((&beta - Mat2::identity(2, 2) * 2.0_f64.sqrt()).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_unit_normal() {
        let sys = ode(2.0);
        let nu = DVector::from_row_slice(&[2.0]);
        assert!(characteristic_matrix(&sys, &[1.0], &nu).is_err());
    }

    #[test]
    fn p_convexity_of_interval_containing_singular_point() {
        let sys: LinearSystemField<f64> = LinearSystemField::singular_ode(0.3, 2.0);
        let ball = BallDomain::new(DVector::from_row_slice(&[0.3]), 1.0).unwrap();
        let (ok, min_eig) = check_p_convex(&sys, &ball, 2, 1e-10).unwrap();
        assert!(ok);
        assert!((min_eig - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_convexity_fails_when_singular_point_outside() {
        // Interval (x0 + 1, x0 + 2): at the left endpoint ν = −1 and
        // β = −(x − x0) < 0.
        let sys = LinearSystemField::singular_ode(0.0, 2.0);
        let ball = BallDomain::new(DVector::from_row_slice(&[1.5]), 0.5).unwrap();
        let (ok, min_eig) = check_p_convex(&sys, &ball, 2, 1e-10).unwrap();
        assert!(!ok);
        assert!(min_eig < 0.0);
    }

    #[test]
    fn p_convexity_fails_for_constant_coefficients() {
        // Constant A¹ = I: β has opposite signs at the two endpoints.
        let a = MatrixField::constant(Mat2::identity(1, 1));
        let b = MatrixField::constant(Mat2::identity(1, 1) * 3.0);
        let sys =
            LinearSystemField::new(1, 1, vec![a], b, VectorField::zero(1), true).unwrap();
        let ball = BallDomain::new(DVector::from_row_slice(&[0.0]), 1.0).unwrap();
        let (ok, _) = check_p_convex(&sys, &ball, 2, 1e-10).unwrap();
        assert!(!ok);
    }

    #[test]
    fn legendre_implies_legendre_hadamard() {
        let sys = LinearSystemField::manufactured_2d(3.0);
        let rep = check_ssp(&sys, &[vec![0.0, 0.0]], 1e-10).unwrap();
        assert!(rep.lambda1_min > 0.0);
        assert!(rep.lh_min > 0.0);
    }

    #[test]
    fn jet_and_central_difference_q_agree() {
        // Same field supplied as an exact jet and as an opaque callable:
        // Q0/Q1 agree to O(fd_step²).
        let fd = 1e-4;
        let jet = LinearSystemField::manufactured_2d(3.0);
        let a1 = MatrixField::callable(
            1,
            1,
            Arc::new(|x: &[f64]| Mat2::from_row_slice(1, 1, &[x[0]])),
        );
        let a2 = MatrixField::callable(
            1,
            1,
            Arc::new(|x: &[f64]| Mat2::from_row_slice(1, 1, &[x[1]])),
        );
        let b = MatrixField::constant(Mat2::from_row_slice(1, 1, &[3.0]));
        let call =
            LinearSystemField::new(2, 1, vec![a1, a2], b, VectorField::zero(1), true).unwrap();
        let x = [0.3, -0.2];
        let dq0 = (assemble_q0(&jet, &x, fd).unwrap() - assemble_q0(&call, &x, fd).unwrap())
            .abs()
            .max();
        let dq1 = (assemble_q1(&jet, &x, fd).unwrap() - assemble_q1(&call, &x, fd).unwrap())
            .abs()
            .max();
        let bound = 10.0 * fd * fd * 3.0;
        assert!(dq0 <= bound && dq1 <= bound, "dq0 {dq0} dq1 {dq1}");
    }
}
