//! Extension of a locally positive system to a globally positive one.
//!
//! The system is split at a point into constant + linear + remainder parts;
//! the remainders (which vanish to orders 1 and 2 at the point) are measured
//! on a small ball `B_r`, the radius is shrunk until they fit a perturbation
//! budget derived from the minimum eigenvalues of the point forms, and the
//! remainders are then extended to all of `R^n` by higher-order radial
//! reflection with a smooth cutoff supported in `B_{2r}`.  The extended
//! system keeps the linear growth of its leading coefficients, so for every
//! sufficiently large `R` the ball `B_R` has a positive definite boundary
//! characteristic matrix: a P-convex domain on which the no-boundary-
//! condition solve is well posed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::field::{LinearSystemField, MatrixField, MatrixFn, VectorField};
use crate::linalg::{min_eigenvalue, symmetrize};
use crate::positivity::{assemble_q0, assemble_q1, characteristic_matrix, default_fd_step};
use crate::{net, Error, Result, Scalar};

/// Constant + linear + remainder split of a system at the origin of its
/// (shifted) coordinates.
#[derive(Clone)]
pub struct TaylorJet<T: Scalar> {
    pub n: usize,
    pub s: usize,
    pub b_bar: DMatrix<T>,
    pub a_bar: Vec<DMatrix<T>>,
    /// `a_deriv[i][j] = ∂_j A^i(0)`.
    pub a_deriv: Vec<Vec<DMatrix<T>>>,
    pub b_hat: MatrixFn<T>,
    pub a_hat: Vec<MatrixFn<T>>,
    pub h: VectorField<T>,
}

/// Split the coefficients at `center`.  Exact for polynomial jets; extracted
/// by central differences otherwise, with remainders defined by subtraction
/// either way, so the reconstruction is exact by construction.
pub fn taylor_split<T: Scalar>(
    sys: &LinearSystemField<T>,
    center: &[T],
) -> Result<TaylorJet<T>> {
    let (n, s) = (sys.n, sys.s);
    let fd = default_fd_step::<T>();
    let b_bar = sys.b.eval(center);
    let a_bar: Vec<DMatrix<T>> = sys.a.iter().map(|a| a.eval(center)).collect();
    let a_deriv: Vec<Vec<DMatrix<T>>> = sys
        .a
        .iter()
        .map(|a| (0..n).map(|j| a.derivative(center, j, fd)).collect())
        .collect();
    for m in a_bar.iter().chain(a_deriv.iter().flatten()).chain([&b_bar]) {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient jet"));
        }
    }

    let center_v: Vec<T> = center.to_vec();
    let b_field = sys.b.clone();
    let b_bar_c = b_bar.clone();
    let cv = center_v.clone();
    let b_hat: MatrixFn<T> = Arc::new(move |y: &[T]| {
        let x: Vec<T> = y.iter().zip(&cv).map(|(yi, ci)| *yi + *ci).collect();
        b_field.eval(&x) - &b_bar_c
    });
    let mut a_hat = Vec::with_capacity(n);
    for i in 0..n {
        let a_field = sys.a[i].clone();
        let a_bar_i = a_bar[i].clone();
        let lin_i = a_deriv[i].clone();
        let cv = center_v.clone();
        a_hat.push(Arc::new(move |y: &[T]| {
            let x: Vec<T> = y.iter().zip(&cv).map(|(yi, ci)| *yi + *ci).collect();
            let mut m = a_field.eval(&x) - &a_bar_i;
            for (j, lin) in lin_i.iter().enumerate() {
                m -= lin * y[j];
            }
            m
        }) as MatrixFn<T>);
    }

    // Shifted right-hand side.
    let h_field = sys.h.clone();
    let cv = center_v;
    let s_len = s;
    let h = VectorField::callable(
        s_len,
        Arc::new(move |y: &[T]| {
            let x: Vec<T> = y.iter().zip(&cv).map(|(yi, ci)| *yi + *ci).collect();
            h_field.eval(&x)
        }),
    );

    Ok(TaylorJet {
        n,
        s,
        b_bar,
        a_bar,
        a_deriv,
        b_hat,
        a_hat,
        h,
    })
}

/// Smooth step equal to 0 for `u ≤ 0` and 1 for `u ≥ 1`.
fn smooth_step<T: Scalar>(u: T) -> T {
    let bump = |v: T| -> T {
        if v <= T::zero() {
            T::zero()
        } else {
            (-T::one() / v).exp()
        }
    };
    let a = bump(u);
    let b = bump(T::one() - u);
    a / (a + b)
}

/// Cutoff fraction of the outer annulus where the extension transitions to
/// zero: identity on `B_r`, value-carrying out to `2r(1 − CUTOFF_MARGIN)`,
/// zero at `2r`.
pub const CUTOFF_MARGIN: f64 = 0.1;

fn reflect_points<T: Scalar>(x: &[T], r: T) -> Option<(Vec<T>, Vec<T>, T)> {
    let rho = x
        .iter()
        .fold(T::zero(), |acc, v| acc + *v * *v)
        .sqrt();
    if rho <= r {
        return None;
    }
    let two_r = T::c(2.0) * r;
    let plateau = two_r * (T::one() - T::c(CUTOFF_MARGIN));
    let cut = if rho <= plateau {
        T::one()
    } else {
        T::one() - smooth_step((rho - plateau) / (two_r - plateau))
    };
    let s1 = (two_r - rho) / rho;
    let s2 = (T::c(3.0) * r - T::c(2.0) * rho) / rho;
    let p1: Vec<T> = x.iter().map(|v| *v * s1).collect();
    let p2: Vec<T> = x.iter().map(|v| *v * s2).collect();
    Some((p1, p2, cut))
}

/// Extend a matrix-valued field from `B_r` to `R^n`: identity inside,
/// `ψ(|x|) (3 f(π₁ x) − 2 f(π₂ x))` on the annulus `r < |x| < 2r` with the
/// two radial reflections `π₁, π₂` into the closed ball, zero outside `B_2r`.
/// The reflection coefficients `(3, −2)` match values and first derivatives
/// across the sphere, so the extension is C¹ and linear in `f`.
pub fn extend_matrix_field<T: Scalar>(
    f: MatrixFn<T>,
    r: T,
    rows: usize,
    cols: usize,
) -> MatrixFn<T> {
    Arc::new(move |x: &[T]| match reflect_points(x, r) {
        None => f(x),
        Some((p1, p2, cut)) => {
            if cut == T::zero() {
                return DMatrix::zeros(rows, cols);
            }
            let m = f(&p1) * T::c(3.0) - f(&p2) * T::c(2.0);
            m * cut
        }
    })
}

/// Measured per-order amplification factors of the extension:
/// `sup |D^k (E f)| / sup |D^k f|` for `k = 0 ..= k_max`, on dense
/// deterministic sample sets.  The sum norm then obeys
/// `‖E f‖_{k,∞} ≤ (max_{j ≤ k} M_j) ‖f‖_{k,∞}`.  Derivatives are measured by
/// central differences with step proportional to `r`, and sample nets scale
/// with `r`, so the measured constants are exactly invariant under
/// rescaling.
pub fn measure_extension_constants<T: Scalar>(
    f: &MatrixFn<T>,
    r: T,
    n: usize,
    k_max: usize,
) -> Result<Vec<T>> {
    let ext = extend_matrix_field(f.clone(), r, f(&vec![T::zero(); n]).nrows(), {
        let probe = f(&vec![T::zero(); n]);
        probe.ncols()
    });
    let fd = r * T::c(1e-5);
    let inner = net::ball(n, &DVector::zeros(n), r * T::c(0.999), 400);
    let outer = net::ball(n, &DVector::zeros(n), r * T::c(1.999), 900);
    let sup_norms = |g: &MatrixFn<T>, pts: &[DVector<T>], k: usize| -> Result<Vec<T>> {
        let mut sups = vec![T::zero(); k + 1];
        for p in pts {
            let x: Vec<T> = p.iter().copied().collect();
            let m = g(&x);
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("field sample"));
            }
            sups[0] = sups[0].max(m.abs().max());
            if k >= 1 {
                for dir in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[dir] += fd;
                    xm[dir] -= fd;
                    let d = (g(&xp) - g(&xm)) / (T::c(2.0) * fd);
                    sups[1] = sups[1].max(d.abs().max());
                }
            }
            if k >= 2 {
                for dir in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[dir] += fd;
                    xm[dir] -= fd;
                    let d2 = (g(&xp) + g(&xm) - g(&x) * T::c(2.0)) / (fd * fd);
                    sups[2] = sups[2].max(d2.abs().max());
                }
            }
        }
        Ok(sups)
    };
    let f_sup = sup_norms(f, &inner, k_max)?;
    let e_sup = sup_norms(&ext, &outer, k_max)?;
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        out.push(if f_sup[k] > T::zero() {
            e_sup[k] / f_sup[k]
        } else {
            T::one()
        });
    }
    Ok(out)
}

/// Parameters governing admissibility of perturbations around the jet.
#[derive(Clone, Debug)]
pub struct AdmissibleParams<T: Scalar> {
    pub r: T,
    pub rho: T,
    pub alpha: usize,
    pub delta: T,
    pub m0: T,
    pub m1: T,
}

impl<T: Scalar> AdmissibleParams<T> {
    /// Derive the budget from the point eigenvalues: the largest `δ` whose
    /// worst-case effect on the point forms (operator-norm bound of an
    /// entrywise-δ perturbation) keeps their minima at or above half, plus
    /// measured extension constants on a quadratic probe shape.
    pub fn derive(n: usize, s: usize, lambda0: T, lambda1: T) -> Result<Self> {
        if lambda0 <= T::zero() || lambda1 <= T::zero() {
            return Err(Error::BudgetUnreachable(format!(
                "point forms not positive (lambda0 {}, lambda1 {})",
                lambda0.to_real(),
                lambda1.to_real()
            )));
        }
        let sc = T::c(s as f64);
        let nc = T::c(n as f64);
        let delta0 = lambda0 / (T::c(2.0) * (T::c(2.0) + nc) * sc);
        let delta1 = lambda1 / (T::c(4.0) * nc * sc);
        let delta = delta0.min(delta1);
        let probe: MatrixFn<T> = Arc::new(move |x: &[T]| {
            let q = x.iter().fold(T::zero(), |acc, v| acc + *v * *v);
            DMatrix::from_row_slice(1, 1, &[q])
        });
        let consts = measure_extension_constants(&probe, T::one(), n, 1)?;
        // The sum-norm bound uses the max of the per-order constants.
        let m0 = consts[0].max(T::one());
        Ok(AdmissibleParams {
            r: T::one(),
            rho: T::c(0.1),
            alpha: 3 + n / 2,
            delta,
            m0,
            m1: consts[1].max(m0),
        })
    }
}

/// A system extended to all of `R^n` with certified positivity bounds.
#[derive(Clone)]
pub struct ExtendedSystem<T: Scalar> {
    pub system: LinearSystemField<T>,
    pub r: T,
    pub params: AdmissibleParams<T>,
    /// Minimum eigenvalues of the point forms.
    pub lambda0: T,
    pub lambda1: T,
    /// Certified global lower bounds (half the point values), together with
    /// the minima actually measured on the verification net.
    pub lambda0_half: T,
    pub lambda1_half: T,
    pub measured_q0_min: T,
    pub measured_q1_min: T,
}

/// Build the extension: shrink `r` geometrically until the remainder
/// sup-norms fit the budget, extend the remainders, and verify the global
/// positivity bounds by dense sampling.
pub fn build_extended_system<T: Scalar>(
    jet: &TaylorJet<T>,
    r_init: T,
) -> Result<ExtendedSystem<T>> {
    let (n, s) = (jet.n, jet.s);
    let fd = default_fd_step::<T>();

    // Point forms.
    let mut q0_bar = &jet.b_bar + jet.b_bar.transpose();
    for i in 0..n {
        q0_bar -= &jet.a_deriv[i][i];
    }
    let lambda0 = min_eigenvalue(&symmetrize(&q0_bar));
    let mut q1_bar = DMatrix::zeros(n * s, n * s);
    for i in 0..n {
        for j in 0..n {
            let block = &jet.a_deriv[j][i] + &jet.a_deriv[i][j];
            q1_bar.view_mut((i * s, j * s), (s, s)).copy_from(&block);
        }
    }
    let lambda1 = min_eigenvalue(&q1_bar);
    let params = AdmissibleParams::derive(n, s, lambda0, lambda1)?;

    // Shrink r until the measured remainder norms fit the budget.
    let b_budget = params.delta / (T::c(4.0) * params.m0);
    let a1_budget = params.delta / (T::c(4.0) * params.m1);
    let a0_budget = params.delta / (T::c(2.0) * params.m0);
    let mut r = r_init;
    let mut ok = false;
    let mut last_report = String::new();
    for _ in 0..20 {
        let pts = net::ball(n, &DVector::zeros(n), r, 300);
        let fd_r = r * T::c(1e-5);
        let sup0 = |f: &MatrixFn<T>| -> T {
            pts.iter().fold(T::zero(), |acc, p| {
                let x: Vec<T> = p.iter().copied().collect();
                acc.max(f(&x).abs().max())
            })
        };
        let sup1 = |f: &MatrixFn<T>| -> T {
            pts.iter().fold(T::zero(), |acc, p| {
                let x: Vec<T> = p.iter().copied().collect();
                let mut local = T::zero();
                for dir in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[dir] += fd_r;
                    xm[dir] -= fd_r;
                    let d = (f(&xp) - f(&xm)) / (T::c(2.0) * fd_r);
                    local = local.max(d.abs().max());
                }
                acc.max(local)
            })
        };
        let b0 = sup0(&jet.b_hat);
        let mut a0 = T::zero();
        let mut a1 = T::zero();
        for ah in &jet.a_hat {
            a0 = a0.max(sup0(ah));
            a1 = a1.max(sup0(ah) + sup1(ah));
        }
        if b0 < b_budget && a1 < a1_budget && a0 < a0_budget {
            ok = true;
            break;
        }
        last_report = format!(
            "at r = {}: |Bhat| = {} (budget {}), |Ahat|_1 = {} (budget {}), |Ahat| = {} (budget {})",
            r.to_real(),
            b0.to_real(),
            b_budget.to_real(),
            a1.to_real(),
            a1_budget.to_real(),
            a0.to_real(),
            a0_budget.to_real()
        );
        r *= T::c(0.5);
    }
    if !ok {
        return Err(Error::BudgetUnreachable(last_report));
    }

    // Extended coefficient fields.
    let b_field = MatrixField::jet_with_remainder(
        jet.b_bar.clone(),
        Vec::new(),
        extend_matrix_field(jet.b_hat.clone(), r, s, s),
    );
    let mut a_fields = Vec::with_capacity(n);
    for i in 0..n {
        a_fields.push(MatrixField::jet_with_remainder(
            jet.a_bar[i].clone(),
            jet.a_deriv[i].clone(),
            extend_matrix_field(jet.a_hat[i].clone(), r, s, s),
        ));
    }
    // Extended right-hand side: restriction then reflection of h itself.
    let h_inner = jet.h.clone();
    let h_fn: MatrixFn<T> = Arc::new(move |x: &[T]| {
        let v = h_inner.eval(x);
        DMatrix::from_fn(v.len(), 1, |i, _| v[i])
    });
    let h_ext = extend_matrix_field(h_fn, r, s, 1);
    let h_field = VectorField::callable(
        s,
        Arc::new(move |x: &[T]| {
            let m = h_ext(x);
            DVector::from_fn(m.nrows(), |i, _| m[(i, 0)])
        }),
    );
    let system = LinearSystemField::new(n, s, a_fields, b_field, h_field, true)?;

    // Verify the global bounds on a dense net of a large ball.
    let sample_radius = (T::c(4.0) * r).max(T::c(2.0));
    let pts = net::ball(n, &DVector::zeros(n), sample_radius, 1000);
    let mut q0_min = T::c(f64::INFINITY);
    let mut q1_min = T::c(f64::INFINITY);
    for p in pts {
        let x: Vec<T> = p.iter().copied().collect();
        let q0 = assemble_q0(&system, &x, fd)?;
        let q1 = assemble_q1(&system, &x, fd)?;
        q0_min = q0_min.min(min_eigenvalue(&symmetrize(&q0)));
        q1_min = q1_min.min(min_eigenvalue(&q1));
    }
    let half = T::c(0.5);
    let slack = T::c(1e-7);
    if q0_min < lambda0 * half - slack || q1_min < lambda1 * half - slack {
        return Err(Error::BudgetUnreachable(format!(
            "extended forms fell below half the point minima (Q0 {} vs {}, Q1 {} vs {})",
            q0_min.to_real(),
            (lambda0 * half).to_real(),
            q1_min.to_real(),
            (lambda1 * half).to_real()
        )));
    }

    Ok(ExtendedSystem {
        system,
        r,
        params: AdmissibleParams { r, ..params },
        lambda0,
        lambda1,
        lambda0_half: lambda0 * half,
        lambda1_half: lambda1 * half,
        measured_q0_min: q0_min,
        measured_q1_min: q1_min,
    })
}

/// Growth record of the boundary minimum eigenvalue with the radius.
#[derive(Clone, Debug)]
pub struct PConvexReport<T: Scalar> {
    pub radius: T,
    pub min_boundary_eigenvalue: T,
    /// `(R, measured min eigenvalue, R λ1 / 4 − measured lower-order bound)`
    /// for every candidate tried.
    pub growth: Vec<(T, T, T)>,
}

/// Find the smallest candidate radius whose boundary characteristic matrix
/// is positive definite on the deterministic boundary net, and record the
/// measured eigenvalue growth against the `R λ1 / 4` structure.
pub fn find_p_convex_radius<T: Scalar>(
    ext: &ExtendedSystem<T>,
    candidates: &[T],
    tol: T,
) -> Result<PConvexReport<T>> {
    if ext.lambda1_half <= T::zero() {
        return Err(Error::NoPConvexRadius(
            "first-order form not certified positive".into(),
        ));
    }
    let n = ext.system.n;
    let mut growth = Vec::new();
    let mut found: Option<(T, T)> = None;
    for &radius in candidates {
        let mut min_eig = T::c(f64::INFINITY);
        let mut lower_order = T::zero();
        for dir in net::unit_sphere::<T>(n, 64 * n) {
            let x = &dir * radius;
            let beta = characteristic_matrix(&ext.system, x.as_slice(), &dir)?;
            min_eig = min_eig.min(min_eigenvalue(&symmetrize(&beta)));
            // Non-growing part: β without the linear-coefficient term.
            let mut low = DMatrix::zeros(ext.system.s, ext.system.s);
            for i in 0..n {
                let mut growing = DMatrix::zeros(ext.system.s, ext.system.s);
                for j in 0..n {
                    growing += &ext_a_deriv(ext, i, j) * x[j];
                }
                low += (ext.system.a[i].eval(x.as_slice()) - growing) * dir[i];
            }
            lower_order = lower_order.max(spectral_norm_bound(&low));
        }
        let bound = radius * ext.lambda1 * T::c(0.25) - lower_order;
        growth.push((radius, min_eig, bound));
        if min_eig > tol && found.is_none() {
            found = Some((radius, min_eig));
        }
    }
    match found {
        Some((radius, min_eig)) => Ok(PConvexReport {
            radius,
            min_boundary_eigenvalue: min_eig,
            growth,
        }),
        None => Err(Error::NoPConvexRadius(format!(
            "no candidate among {} radii certified positive",
            candidates.len()
        ))),
    }
}

fn ext_a_deriv<T: Scalar>(ext: &ExtendedSystem<T>, i: usize, j: usize) -> DMatrix<T> {
    match &ext.system.a[i] {
        MatrixField::Jet { linear, .. } if j < linear.len() => linear[j].clone(),
        _ => DMatrix::zeros(ext.system.s, ext.system.s),
    }
}

fn spectral_norm_bound<T: Scalar>(m: &DMatrix<T>) -> T {
    // Frobenius norm dominates the spectral norm.
    m.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}
