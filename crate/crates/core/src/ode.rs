//! The 1-D regular-singular model equation `(x − x0) u' + b u = h(x)`.
//!
//! Its general solution is
//!
//! ```text
//! u(x) = (x − x0)^{−b} ∫_{x0}^{x} (y − x0)^{b−1} h(y) dy + C (x − x0)^{−b},
//! ```
//!
//! continuous at `x0` iff `C = 0`.  On an interval containing `x0`
//! (a P-convex domain for this operator) the smooth solution is therefore
//! unique without any boundary data, while on an interval excluding `x0`
//! there is a one-parameter family.  `uniqueness_demo` exhibits the discrete
//! counterpart of this dichotomy.

use std::sync::Arc;

use nalgebra::DVector;

use crate::linalg::{cgls, singular_values, SparseMatrix};
use crate::{quad, Error, Result, Scalar};

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Parameters of the model equation.
#[derive(Clone)]
pub struct OdeSpec<T: Scalar> {
    pub x0: T,
    pub b: T,
    pub h: ScalarFn<T>,
    /// Coefficient of the homogeneous mode `(x − x0)^{−b}`.
    pub c: T,
}

impl<T: Scalar> OdeSpec<T> {
    pub fn new(x0: T, b: T, h: ScalarFn<T>) -> Self {
        OdeSpec {
            x0,
            b,
            h,
            c: T::zero(),
        }
    }

    pub fn with_homogeneous(mut self, c: T) -> Self {
        self.c = c;
        self
    }
}

/// Named right-hand sides used by the CLI.
pub fn builtin_rhs<T: Scalar>(name: &str) -> Result<ScalarFn<T>> {
    match name {
        "const1" => Ok(Arc::new(|_x| T::one())),
        "linear" => Ok(Arc::new(|x| x)),
        "sin" => Ok(Arc::new(|x: T| x.sin())),
        other => Err(Error::InvalidInput(format!("unknown rhs `{other}`"))),
    }
}

/// Evaluate the closed-form solution at `x` by adaptive Gauss quadrature with
/// `quad_points` nodes per panel.
///
/// The particular integral is computed in the substituted form
/// `∫_0^1 t^{b−1} h(x0 + t (x − x0)) dt`, which is regular for `b ≥ 1` and
/// integrable for `0 < b < 1`; at `x = x0` it reduces to `h(x0)/b`.
pub fn closed_form<T: Scalar>(spec: &OdeSpec<T>, x: T, quad_points: usize) -> Result<T> {
    if spec.b <= T::zero() && x == spec.x0 {
        return Err(Error::ParameterOutOfRange(format!(
            "b = {} is not integrable at the singular point",
            spec.b.to_real()
        )));
    }
    if spec.c != T::zero() && x == spec.x0 {
        return Err(Error::UnboundedAtSingularPoint);
    }
    let h = spec.h.clone();
    let (x0, b) = (spec.x0, spec.b);
    let dx = x - x0;
    let integrand = move |t: T| {
        let w = if b == T::one() {
            T::one()
        } else {
            t.max(T::c(1e-300)).powf(b - T::one())
        };
        w * h(x0 + t * dx)
    };
    let particular = quad::adaptive(&integrand, T::zero(), T::one(), quad_points, T::c(1e-12));
    let mut u = particular;
    if spec.c != T::zero() {
        u += spec.c * dx.powf(-b);
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("closed-form solution"));
    }
    Ok(u)
}

/// Report returned by [`uniqueness_demo`].
#[derive(Clone, Debug)]
pub struct UniquenessReport<T: Scalar> {
    /// Whether the interval contains the singular point.
    pub pconvex: bool,
    /// Number of extra discrete degrees of freedom (near-null directions).
    pub solution_space_dim: usize,
    /// `|M u − h|` of the least-squares solution.
    pub residual: T,
    pub grid: Vec<T>,
    pub solution: DVector<T>,
    /// Smallest singular values of the discrete operator, ascending.
    pub smallest_singular_values: Vec<T>,
}

/// Discretize the equation with upwind differences (one-sided toward the
/// singular point, the direction information flows from) and no boundary
/// conditions, then solve in the least-squares sense and measure the
/// numerical rank deficiency of the discrete operator.
pub fn uniqueness_demo<T: Scalar>(
    spec: &OdeSpec<T>,
    interval: (T, T),
    grid_size: usize,
) -> Result<UniquenessReport<T>> {
    let (a, b_end) = interval;
    if b_end <= a || grid_size < 3 {
        return Err(Error::InvalidInput("need b > a and at least 3 nodes".into()));
    }
    let m = grid_size;
    let dx = (b_end - a) / T::c((m - 1) as f64);
    let grid: Vec<T> = (0..m).map(|i| a + dx * T::c(i as f64)).collect();
    let inside = spec.x0 > a && spec.x0 < b_end;
    if inside {
        let edge_dist = (spec.x0 - a).min(b_end - spec.x0);
        if dx > edge_dist {
            return Err(Error::GridTooCoarse);
        }
    }

    let (matrix, rhs) = assemble_upwind(spec, &grid, dx);
    let (solution, residual) = cgls(&matrix, &rhs, T::c(1e-14), 20 * m + 200);

    // Pad the operator to square with zero rows so the full singular spectrum
    // (including exact kernel directions of a wide matrix) is visible.
    let mut dense = matrix.to_dense();
    if dense.nrows() < dense.ncols() {
        let nc = dense.ncols();
        dense = dense.resize(nc, nc, T::zero());
    }
    let sv = singular_values(&dense);
    let smallest: Vec<T> = sv.iter().rev().take(4).copied().collect();
    let near_null = sv.iter().filter(|&&s| s < T::c(1e-8)).count();

    Ok(UniquenessReport {
        pconvex: inside,
        solution_space_dim: near_null,
        residual,
        grid,
        solution,
        smallest_singular_values: smallest,
    })
}

/// Least-squares solve of the upwind discretization alone (no singular-value
/// analysis); used where the grid is too fine for a dense SVD.
pub fn solve_no_bc<T: Scalar>(
    spec: &OdeSpec<T>,
    interval: (T, T),
    grid_size: usize,
) -> Result<(Vec<T>, DVector<T>, T)> {
    let (a, b_end) = interval;
    let m = grid_size;
    let dx = (b_end - a) / T::c((m - 1) as f64);
    let grid: Vec<T> = (0..m).map(|i| a + dx * T::c(i as f64)).collect();
    let (matrix, rhs) = assemble_upwind(spec, &grid, dx);
    let (solution, residual) = cgls(&matrix, &rhs, T::c(1e-14), 40 * m + 200);
    Ok((grid, solution, residual))
}

/// One equation per node where the upwind stencil fits: backward difference
/// right of `x0`, forward difference left of it.  Nodes whose upwind
/// neighbor falls outside the grid get no equation, so no boundary data is
/// ever imposed.
fn assemble_upwind<T: Scalar>(
    spec: &OdeSpec<T>,
    grid: &[T],
    dx: T,
) -> (SparseMatrix<T>, DVector<T>) {
    let m = grid.len();
    let mut matrix = SparseMatrix::new(m);
    let mut rhs_rows = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        let coeff = x - spec.x0;
        let backward = coeff >= T::zero();
        if backward && i == 0 {
            continue;
        }
        if !backward && i == m - 1 {
            continue;
        }
        let inv = T::one() / dx;
        if backward {
            matrix.push_row(&[(i - 1, -coeff * inv), (i, coeff * inv + spec.b)]);
        } else {
            matrix.push_row(&[(i, -coeff * inv + spec.b), (i + 1, coeff * inv)]);
        }
        rhs_rows.push((spec.h)(x));
    }
    (matrix, DVector::from_vec(rhs_rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_b2_const() -> OdeSpec<f64> {
        OdeSpec::new(0.0, 2.0, Arc::new(|_| 1.0))
    }

    #[test]
    fn closed_form_constant_rhs_is_half() {
        // b = 2, h ≡ 1: u(x) = x^{-2} ∫_0^x y dy = 1/2; substitution check
        // x·u' + 2·u = 0 + 1 = h.
        let spec = spec_b2_const();
        for x in [-1.0, -0.3, 0.0, 0.25, 2.0] {
            let u = closed_form(&spec, x, 16).unwrap();
            assert!((u - 0.5).abs() < 1e-11, "u({x}) = {u}");
        }
    }

    #[test]
    fn closed_form_linear_rhs_is_x_over_3() {
        // b = 2, h(y) = y: u(x) = x^{-2} ∫_0^x y·y dy = x/3.
        let spec: OdeSpec<f64> = OdeSpec::new(0.0, 2.0, Arc::new(|y| y));
        for x in [-2.0, -0.5, 0.7, 1.0] {
            let u = closed_form(&spec, x, 16).unwrap();
            assert!((u - x / 3.0).abs() < 1e-11, "u({x}) = {u}");
        }
    }

    #[test]
    fn homogeneous_mode_is_discontinuous_at_x0() {
        let spec = spec_b2_const().with_homogeneous(1.0);
        assert!(matches!(
            closed_form(&spec, 0.0, 16),
            Err(Error::UnboundedAtSingularPoint)
        ));
        // And it blows up approaching the singular point.
        let near = closed_form(&spec, 1e-4, 16).unwrap();
        assert!(near.abs() > 1e6);
    }

    #[test]
    fn closed_form_satisfies_ode_pointwise() {
        let spec = OdeSpec::new(0.0, 2.0, Arc::new(|y: f64| (3.0 * y).sin()));
        let du = 1e-5;
        for &x in &[-0.9, -0.4, 0.3, 0.8] {
            let up = closed_form(&spec, x + du, 16).unwrap();
            let um = closed_form(&spec, x - du, 16).unwrap();
            let u = closed_form(&spec, x, 16).unwrap();
            let residual = x * (up - um) / (2.0 * du) + 2.0 * u - (3.0 * x).sin();
            assert!(residual.abs() < 1e-8, "residual {residual} at {x}");
        }
    }

    #[test]
    fn unique_on_interval_containing_singular_point() {
        let spec = spec_b2_const();
        let rep = uniqueness_demo(&spec, (-1.0, 1.0), 201).unwrap();
        assert!(rep.pconvex);
        assert_eq!(rep.solution_space_dim, 0);
        assert!(rep.residual < 1e-8);
        let max_err = rep
            .solution
            .iter()
            .map(|u| (u - 0.5).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-8, "max error {max_err}");
    }

    #[test]
    fn one_parameter_family_off_the_singular_point() {
        let spec = spec_b2_const();
        let rep = uniqueness_demo(&spec, (1.0, 2.0), 101).unwrap();
        assert!(!rep.pconvex);
        assert_eq!(rep.solution_space_dim, 1);
        // The near-null direction is the discrete sampling of C·x^{-2}.
        assert!(rep.smallest_singular_values[0] < 1e-12);
        assert!(rep.smallest_singular_values[1] > 1e-4);
    }

    #[test]
    fn zero_rhs_gives_zero_solution_inside() {
        let spec = OdeSpec::new(0.0, 2.0, Arc::new(|_| 0.0));
        let rep = uniqueness_demo(&spec, (-1.0, 1.0), 101).unwrap();
        assert!(rep.solution.abs().max() < 1e-10);
    }

    #[test]
    fn rejects_grid_coarser_than_singular_point_distance() {
        let spec = OdeSpec::new(0.95, 2.0, Arc::new(|_| 1.0));
        assert!(matches!(
            uniqueness_demo(&spec, (-1.0, 1.0), 11),
            Err(Error::GridTooCoarse)
        ));
    }

    #[test]
    fn converges_to_closed_form_at_first_order() {
        let spec = OdeSpec::new(0.0, 2.0, Arc::new(|y: f64| y.cos()));
        let mut errs = Vec::new();
        for m in [101, 201, 401] {
            let rep = uniqueness_demo(&spec, (-1.0, 1.0), m).unwrap();
            let mut max_err: f64 = 0.0;
            for (i, &x) in rep.grid.iter().enumerate() {
                let exact = closed_form(&spec, x, 16).unwrap();
                max_err = max_err.max((rep.solution[i] - exact).abs());
            }
            errs.push(max_err);
        }
        assert!(
            errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1],
            "errors {errs:?}"
        );
    }
}
