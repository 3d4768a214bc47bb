//! The change of variables that makes the linearized embedding system
//! strongly symmetric positive.
//!
//! The tangential subsystem assembled from an annihilator jet has `B(0) = 0`
//! in normal coordinates, so its zeroth-order form at the origin is
//! `−Σ_i a^i_i` while the diagonal first-order blocks are `2 a^i_i` — the two
//! positivity requirements are incompatible as stated.  The quadratic
//! coordinate change `x^i = x̄^i + ½ c^i_{jk} x̄^j x̄^k` combined with the
//! unknown mixing `v̄ = (I + x̄^ℓ S_ℓ) w̄` shifts the forms to
//!
//! ```text
//! Q̃0        = −a^i_i + c^i_{ij} A^j
//! (Q̃1)_ij   = a^i_j + a^j_i − (c^i_{jk} + c^j_{ik}) A^k
//!             + S_iᵀA^j + A^jS_i + S_jᵀA^i + A^iS_j ,
//! ```
//!
//! which can be driven to `λ I` and `μ I` exactly when the derivative jets
//! satisfy the trace conditions built into the derivative-constraint solver.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::embedding::{hbar_basis, AnnihilatorJet, SffJet};
use crate::field::{LinearSystemField, MatrixField, MatrixFn, VectorField};
use crate::grid::Grid;
use crate::linalg::min_norm_solve;
use crate::positivity::{assemble_q0, assemble_q1};
use crate::{net, Error, Result, Scalar};

/// First-order jet of the Christoffel symbols in coordinates where they
/// vanish at the origin: `deriv[p][j]` is the symmetric matrix
/// `[∂_p Γ^j_{ℓm}(0)]_{ℓm}`.
#[derive(Clone, Debug)]
pub struct ChristoffelJet<T: Scalar> {
    pub n: usize,
    pub deriv: Vec<Vec<DMatrix<T>>>,
}

impl<T: Scalar> ChristoffelJet<T> {
    pub fn zero(n: usize) -> Self {
        ChristoffelJet {
            n,
            deriv: vec![vec![DMatrix::zeros(n, n); n]; n],
        }
    }

    /// `Γ^j_{ℓm}(x)` to first order.
    pub fn gamma_at(&self, x: &[T]) -> Vec<DMatrix<T>> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let mut g = DMatrix::zeros(n, n);
                for (p, per_dir) in self.deriv.iter().enumerate() {
                    g += &per_dir[j] * x[p];
                }
                g
            })
            .collect()
    }
}

pub type MetricPerturbation<T> = Arc<dyn Fn(&[T]) -> DMatrix<T> + Send + Sync>;

/// The assembled tangential subsystem together with the data needed to
/// transform it and to reconstruct normal components.
#[derive(Clone)]
pub struct EmbeddingLinearization<T: Scalar> {
    pub n: usize,
    pub system: LinearSystemField<T>,
    /// `A^i(0)`.
    pub a_mats: Vec<DMatrix<T>>,
    /// `a_derivs[i][ℓ] = a^i_ℓ = [∂_ℓ A^{kij}]_{kj}`.
    pub a_derivs: Vec<Vec<DMatrix<T>>>,
    pub sff: SffJet<T>,
    pub annih: AnnihilatorJet<T>,
    pub gamma_jet: ChristoffelJet<T>,
    pub h_pert: Option<MetricPerturbation<T>>,
    /// Value of λ the derivative jets were completed with; used to name the
    /// violated condition when a transform fails.
    pub lambda_hint: T,
}

/// Build the tangential subsystem `A^i ∂_i v̄ + B v̄ = h` from the jets:
/// `A^i(x) = A^i + x^ℓ a^i_ℓ`, `B^{kj}(x) = −A^{kℓm}(x) Γ^j_{ℓm}(x)` (zero
/// at the origin), and `h^k(x) = ½ A^{kℓm}(x) h_{ℓm}(x)` from the metric
/// perturbation.
pub fn assemble_linearization<T: Scalar>(
    sff: &SffJet<T>,
    annih: &AnnihilatorJet<T>,
    gamma_jet: ChristoffelJet<T>,
    h_pert: Option<MetricPerturbation<T>>,
    lambda_hint: T,
) -> Result<EmbeddingLinearization<T>> {
    let n = sff.n;
    if gamma_jet.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: gamma_jet.n,
            context: "Christoffel jet dimension",
        });
    }
    if annih.a_derivs.len() != n {
        return Err(Error::InvalidInput(
            "annihilator jet lacks completed derivatives".into(),
        ));
    }
    let a_mats: Vec<DMatrix<T>> = (0..n).map(|i| annih.cubic.slice(i)).collect();
    for a in &a_mats {
        if (a - a.transpose()).abs().max() > T::c(1e-12) {
            return Err(Error::InvalidInput(
                "annihilator slices must be symmetric".into(),
            ));
        }
    }
    let a_derivs: Vec<Vec<DMatrix<T>>> = (0..n)
        .map(|i| (0..n).map(|l| annih.a_derivs[l].slice(i)).collect())
        .collect();

    let a_fields: Vec<MatrixField<T>> = (0..n)
        .map(|i| MatrixField::jet(a_mats[i].clone(), a_derivs[i].clone()))
        .collect();

    // B(x) entry (k, j) = −Σ_{ℓm} A^{kℓm}(x) Γ^j_{ℓm}(x): linear part from
    // the Γ jet, exact quadratic remainder from the product.
    let gamma = gamma_jet.clone();
    let cubic = annih.cubic.clone();
    let a_derivs_c = annih.a_derivs.clone();
    let b_exact: MatrixFn<T> = Arc::new(move |x: &[T]| {
        let gam = gamma.gamma_at(x);
        DMatrix::from_fn(gamma.n, gamma.n, |k, j| {
            let mut acc = T::zero();
            for l in 0..gamma.n {
                for m in 0..gamma.n {
                    let mut a_klm = cubic.get(k, l, m);
                    for (p, ad) in a_derivs_c.iter().enumerate() {
                        a_klm += ad.get(k, l, m) * x[p];
                    }
                    acc -= a_klm * gam[j][(l, m)];
                }
            }
            acc
        })
    });
    let mut b_lin = Vec::with_capacity(n);
    for p in 0..n {
        let mut lin = DMatrix::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                let mut acc = T::zero();
                for l in 0..n {
                    for m in 0..n {
                        acc -= annih.cubic.get(k, l, m) * gamma_jet.deriv[p][j][(l, m)];
                    }
                }
                lin[(k, j)] = acc;
            }
        }
        b_lin.push(lin);
    }
    let b_lin_c = b_lin.clone();
    let b_remainder: MatrixFn<T> = Arc::new(move |x: &[T]| {
        let mut m = b_exact(x);
        for (p, lin) in b_lin_c.iter().enumerate() {
            m -= lin * x[p];
        }
        m
    });
    let b_field =
        MatrixField::jet_with_remainder(DMatrix::zeros(n, n), b_lin, b_remainder);

    let h_field = match &h_pert {
        None => VectorField::zero(n),
        Some(pert) => {
            let cubic = annih.cubic.clone();
            let a_derivs_c = annih.a_derivs.clone();
            let pert = pert.clone();
            let nn = n;
            VectorField::callable(
                n,
                Arc::new(move |x: &[T]| {
                    let hp = pert(x);
                    DVector::from_fn(nn, |k, _| {
                        let mut acc = T::zero();
                        for l in 0..nn {
                            for m in 0..nn {
                                let mut a_klm = cubic.get(k, l, m);
                                for (p, ad) in a_derivs_c.iter().enumerate() {
                                    a_klm += ad.get(k, l, m) * x[p];
                                }
                                acc += a_klm * hp[(l, m)];
                            }
                        }
                        acc * T::c(0.5)
                    })
                }),
            )
        }
    };

    let system = LinearSystemField::new(n, n, a_fields, b_field, h_field, true)?;
    Ok(EmbeddingLinearization {
        n,
        system,
        a_mats,
        a_derivs,
        sff: sff.clone(),
        annih: annih.clone(),
        gamma_jet,
        h_pert,
        lambda_hint,
    })
}

/// The transformation data.
#[derive(Clone, Debug)]
pub struct ChangeOfVars<T: Scalar> {
    /// `c[i]` is the symmetric matrix `[c^i_{jk}]`.
    pub c: Vec<DMatrix<T>>,
    pub s: Vec<DMatrix<T>>,
    pub lambda: T,
    pub mu: T,
}

impl<T: Scalar> ChangeOfVars<T> {
    pub fn identity(n: usize, lambda: T, mu: T) -> Self {
        ChangeOfVars {
            c: vec![DMatrix::zeros(n, n); n],
            s: vec![DMatrix::zeros(n, n); n],
            lambda,
            mu,
        }
    }
}

/// Zeroth-order form of the transformed system at the origin, from the
/// closed formula.
pub fn q0_formula<T: Scalar>(
    lin: &EmbeddingLinearization<T>,
    cov: &ChangeOfVars<T>,
) -> DMatrix<T> {
    let n = lin.n;
    let mut q0 = DMatrix::zeros(n, n);
    for i in 0..n {
        q0 -= &lin.a_derivs[i][i];
        for j in 0..n {
            q0 += &lin.a_mats[j] * cov.c[i][(i, j)];
        }
    }
    q0
}

/// First-order block form of the transformed system at the origin, from the
/// closed formula.
pub fn q1_formula<T: Scalar>(
    lin: &EmbeddingLinearization<T>,
    cov: &ChangeOfVars<T>,
) -> DMatrix<T> {
    let n = lin.n;
    let mut q1 = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let mut block = &lin.a_derivs[i][j] + &lin.a_derivs[j][i];
            for k in 0..n {
                block -= &lin.a_mats[k] * (cov.c[i][(j, k)] + cov.c[j][(i, k)]);
            }
            block += cov.s[i].transpose() * &lin.a_mats[j]
                + &lin.a_mats[j] * &cov.s[i]
                + cov.s[j].transpose() * &lin.a_mats[i]
                + &lin.a_mats[i] * &cov.s[j];
            q1.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    q1
}

/// Solve for the change of variables achieving `Q̃0 = λ I` and `Q̃1 = μ I`.
///
/// The formulas above are affine in `(c, S)`; the linear system is formed by
/// probing unit directions and solved in the least-squares sense.  A
/// residual above tolerance means the derivative jets violate one of the
/// solvability conditions, which is identified in the error.
pub fn solve_change_of_vars<T: Scalar>(
    lin: &EmbeddingLinearization<T>,
    lambda: T,
    mu: T,
) -> Result<ChangeOfVars<T>> {
    if lambda <= T::zero() || mu <= T::zero() {
        return Err(Error::ParameterOutOfRange(
            "lambda and mu must be positive".into(),
        ));
    }
    let n = lin.n;
    let c_pairs: Vec<(usize, usize)> = crate::sym::sym_pairs(n);
    let n_c = n * c_pairs.len();
    let n_s = n * n * n;
    let unknowns = n_c + n_s;

    let unpack = |x: &DVector<T>| -> ChangeOfVars<T> {
        let mut cov = ChangeOfVars::identity(n, lambda, mu);
        let mut idx = 0;
        for i in 0..n {
            for &(j, k) in &c_pairs {
                cov.c[i][(j, k)] = x[idx];
                cov.c[i][(k, j)] = x[idx];
                idx += 1;
            }
        }
        for i in 0..n {
            for p in 0..n {
                for q in 0..n {
                    cov.s[i][(p, q)] = x[idx];
                    idx += 1;
                }
            }
        }
        cov
    };

    // Residual map whose zero we seek, flattened over the independent
    // entries of both forms.
    let residual_of = |cov: &ChangeOfVars<T>| -> DVector<T> {
        let q0 = q0_formula(lin, cov);
        let q1 = q1_formula(lin, cov);
        let mut rows = Vec::new();
        for p in 0..n {
            for q in p..n {
                let target = if p == q { lambda } else { T::zero() };
                rows.push(q0[(p, q)] - target);
            }
        }
        for bi in 0..n {
            for bj in bi..n {
                for p in 0..n {
                    let q_start = if bi == bj { p } else { 0 };
                    for q in q_start..n {
                        let target = if bi == bj && p == q { mu } else { T::zero() };
                        rows.push(q1[(bi * n + p, bj * n + q)] - target);
                    }
                }
            }
        }
        DVector::from_vec(rows)
    };

    let zero_cov = unpack(&DVector::zeros(unknowns));
    let base = residual_of(&zero_cov);
    let rows = base.len();
    let mut matrix = DMatrix::zeros(rows, unknowns);
    for c in 0..unknowns {
        let mut e = DVector::zeros(unknowns);
        e[c] = T::one();
        let col = residual_of(&unpack(&e)) - &base;
        matrix.set_column(c, &col);
    }
    let rhs = -&base;
    let x = min_norm_solve(&matrix, &rhs, T::c(1e-12));
    let cov = unpack(&x);
    let residual = residual_of(&cov).abs().max();
    if residual > T::c(1e-9) * (T::one() + lambda.max(mu)) {
        return Err(diagnose_failure(lin, lambda, residual));
    }
    Ok(cov)
}

/// Name the solvability condition the jets violate for the requested λ.
fn diagnose_failure<T: Scalar>(
    lin: &EmbeddingLinearization<T>,
    lambda: T,
    residual: T,
) -> Error {
    let n = lin.n;
    let tol = T::c(1e-8);
    if n == 2 {
        let k = lin.sff.h_mats[0][(0, 0)];
        // Trace condition on the annihilator derivatives.
        let trace_sum = &lin.a_derivs[0][0] + &lin.a_derivs[1][1];
        let mut pairing = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                pairing += lin.sff.h_mats[0][(i, j)] * trace_sum[(i, j)];
            }
        }
        let trace_res = (pairing + (k + T::one()) * lambda).abs();
        if trace_res > tol {
            return Error::TraceConditionViolated {
                condition: "trace of the annihilator derivative jets (n = 2)",
                residual: trace_res.to_real(),
            };
        }
        if !lin.sff.h_jets.is_empty() {
            let hj = &lin.sff.h_jets[0];
            let h_res = (T::c(3.0) * hj.get(0, 0, 1) - k * hj.get(1, 1, 1)
                - (k + T::one()) * lambda)
                .abs();
            if h_res > tol {
                return Error::TraceConditionViolated {
                    condition: "mixed-entry side condition on the derivative jet (n = 2)",
                    residual: h_res.to_real(),
                };
            }
        }
    } else if let (Some(sigma), Some(gamma)) = (lin.sff.sigma, lin.sff.gamma.as_ref()) {
        let hbar = hbar_basis(sigma);
        let mut trace_sum = DMatrix::zeros(3, 3);
        for k in 0..3 {
            trace_sum += &lin.a_derivs[k][k];
        }
        for (beta, hb) in hbar.iter().enumerate() {
            let mut pairing = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    pairing += hb[(i, j)] * trace_sum[(i, j)];
                }
            }
            let res = (pairing + lambda).abs();
            if res > tol {
                let _ = beta;
                return Error::TraceConditionViolated {
                    condition: "trace of the annihilator derivative jets (n = 3)",
                    residual: res.to_real(),
                };
            }
        }
        for alpha in 0..3 {
            if lin.sff.h_jets.len() == 3 {
                let hj = &lin.sff.h_jets[alpha];
                let lhs = T::c(6.0) * hj.get(0, 1, 2)
                    - T::c(2.0) * sigma
                        * (hj.get(0, 0, 0) + hj.get(1, 1, 1) + hj.get(2, 2, 2));
                let rhs =
                    (gamma[(alpha, 0)] + gamma[(alpha, 1)] + gamma[(alpha, 2)]) * lambda;
                if (lhs - rhs).abs() > tol {
                    return Error::TraceConditionViolated {
                        condition: "mixed-entry side condition on the derivative jet (n = 3)",
                        residual: (lhs - rhs).abs().to_real(),
                    };
                }
            }
        }
    }
    Error::ChangeOfVarsResidual {
        residual: residual.to_real(),
        detail: "solvability conditions hold; residual indicates rank failure".into(),
    }
}

/// Apply the change of variables, returning the transformed fields as a
/// first-order jet plus exact remainder samplers: `Ã^i(0)` stays symmetric
/// and the whole product formula is reproduced exactly at every point.
pub fn apply_transform<T: Scalar>(
    lin: &EmbeddingLinearization<T>,
    cov: &ChangeOfVars<T>,
) -> Result<LinearSystemField<T>> {
    let n = lin.n;
    let c = cov.c.clone();
    let s = cov.s.clone();

    let phi = {
        let c = c.clone();
        move |x: &[T]| -> Vec<T> {
            (0..x.len())
                .map(|i| {
                    let mut v = x[i];
                    for j in 0..x.len() {
                        for k in 0..x.len() {
                            v += T::c(0.5) * c[i][(j, k)] * x[j] * x[k];
                        }
                    }
                    v
                })
                .collect()
        }
    };
    let mixer = {
        let s = s.clone();
        move |x: &[T]| -> DMatrix<T> {
            let mut m = DMatrix::identity(x.len(), x.len());
            for (l, sl) in s.iter().enumerate() {
                m += sl * x[l];
            }
            m
        }
    };

    // Exact evaluators.
    let a_exact: Vec<MatrixFn<T>> = (0..n)
        .map(|i| {
            let sys = lin.system.clone();
            let c = c.clone();
            let phi = phi.clone();
            let mixer = mixer.clone();
            Arc::new(move |x: &[T]| {
                let y = phi(x);
                let m = mixer(x);
                let mut core = sys.a[i].eval(&y);
                for j in 0..x.len() {
                    let mut cx = T::zero();
                    for k in 0..x.len() {
                        cx += c[i][(j, k)] * x[k];
                    }
                    core -= sys.a[j].eval(&y) * cx;
                }
                m.transpose() * core * &m
            }) as MatrixFn<T>
        })
        .collect();
    let b_exact: MatrixFn<T> = {
        let sys = lin.system.clone();
        let c = c.clone();
        let s = s.clone();
        let phi = phi.clone();
        let mixer = mixer.clone();
        Arc::new(move |x: &[T]| {
            let y = phi(x);
            let m = mixer(x);
            let mut inner = sys.b.eval(&y) * &m;
            for i in 0..x.len() {
                let mut mix = s[i].clone();
                for j in 0..x.len() {
                    let mut cx = T::zero();
                    for k in 0..x.len() {
                        cx += c[j][(i, k)] * x[k];
                    }
                    mix -= &s[j] * cx;
                }
                inner += sys.a[i].eval(&y) * mix;
            }
            m.transpose() * inner
        })
    };
    let h_exact = {
        let sys = lin.system.clone();
        let phi = phi.clone();
        let mixer = mixer.clone();
        move |x: &[T]| -> DVector<T> {
            let y = phi(x);
            mixer(x).transpose() * sys.h.eval(&y)
        }
    };

    // Jet parts at the origin.
    let fd = crate::positivity::default_fd_step::<T>();
    let b0 = lin.system.b.eval(&vec![T::zero(); n]);
    let h0 = lin.system.h.eval(&vec![T::zero(); n]);
    let mut a_fields = Vec::with_capacity(n);
    for i in 0..n {
        let a0 = lin.a_mats[i].clone();
        let mut linear = Vec::with_capacity(n);
        for l in 0..n {
            let mut d = s[l].transpose() * &a0 + &a0 * &s[l] + &lin.a_derivs[i][l];
            for j in 0..n {
                d -= &lin.a_mats[j] * c[i][(j, l)];
            }
            linear.push(d);
        }
        let exact = a_exact[i].clone();
        let a0c = a0.clone();
        let lin_c = linear.clone();
        let rem: MatrixFn<T> = Arc::new(move |x: &[T]| {
            let mut m = exact(x) - &a0c;
            for (l, dl) in lin_c.iter().enumerate() {
                m -= dl * x[l];
            }
            m
        });
        a_fields.push(MatrixField::jet_with_remainder(a0, linear, rem));
    }

    // B̃(0) = B(0) + Σ A^i(0) S_i, and its exact first derivatives.
    let mut b_const = b0.clone();
    for i in 0..n {
        b_const += &lin.a_mats[i] * &s[i];
    }
    let mut b_linear = Vec::with_capacity(n);
    for l in 0..n {
        let b_l = lin.system.b.derivative(&vec![T::zero(); n], l, fd);
        let mut d = s[l].transpose() * &b_const + b_l + &b0 * &s[l];
        for i in 0..n {
            d += &lin.a_derivs[i][l] * &s[i];
            for j in 0..n {
                d -= &lin.a_mats[i] * (&s[j] * c[j][(i, l)]);
            }
        }
        b_linear.push(d);
    }
    let b_exact_c = b_exact.clone();
    let b_const_c = b_const.clone();
    let b_linear_c = b_linear.clone();
    let b_rem: MatrixFn<T> = Arc::new(move |x: &[T]| {
        let mut m = b_exact_c(x) - &b_const_c;
        for (l, dl) in b_linear_c.iter().enumerate() {
            m -= dl * x[l];
        }
        m
    });
    let b_field = MatrixField::jet_with_remainder(b_const, b_linear, b_rem);

    let h_field = VectorField::callable(n, Arc::new(h_exact));
    let _ = h0;
    LinearSystemField::new(n, n, a_fields, b_field, h_field, true)
}

/// Largest sampled radius (by bisection) on which the transformed system
/// keeps `Q0 ≥ fraction·λ` and `Q1 ≥ fraction·μ`.
pub fn neighborhood_positivity_radius<T: Scalar>(
    sys: &LinearSystemField<T>,
    lambda: T,
    mu: T,
    fraction: T,
    r_max: T,
) -> Result<T> {
    let fd = crate::positivity::default_fd_step::<T>();
    let holds = |radius: T| -> Result<bool> {
        let pts = net::ball(sys.n, &DVector::zeros(sys.n), radius, 60);
        for p in &pts {
            let x: Vec<T> = p.iter().copied().collect();
            let q0 = assemble_q0(sys, &x, fd)?;
            let q1 = assemble_q1(sys, &x, fd)?;
            if crate::linalg::min_eigenvalue(&crate::linalg::symmetrize(&q0))
                < fraction * lambda
                || crate::linalg::min_eigenvalue(&q1) < fraction * mu
            {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !holds(r_max * T::c(1e-3))? {
        return Ok(T::zero());
    }
    let mut lo = r_max * T::c(1e-3);
    let mut hi = r_max;
    if holds(hi)? {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = (lo + hi) * T::c(0.5);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Result of reconstructing the full unknown from the tangential components.
#[derive(Clone, Debug)]
pub struct Reconstruction<T: Scalar> {
    /// `N = n(n+1)/2` components per node: tangential first, then normal.
    pub values: DVector<T>,
    /// Max over nodes of the projection defect of `η` onto the span of the
    /// normal components; nonzero data outside the compatible range is
    /// reported here rather than hidden.
    pub projection_residual: T,
}

/// Recover the full unknown from tangential grid values: form
/// `η_ij = h_ij − ∇_i v̄_j − ∇_j v̄_i` with the jet's connection, then solve
/// the pointwise algebraic system `v · E_i = v̄_i`, `−2 v · H_ij = η_ij`.
pub fn reconstruct_normal_components<T: Scalar>(
    grid: &Grid<T>,
    vbar: &DVector<T>,
    lin: &EmbeddingLinearization<T>,
    h_pert: &MetricPerturbation<T>,
) -> Result<Reconstruction<T>> {
    let n = lin.n;
    let big_n = n * (n + 1) / 2;
    let normals = big_n - n;
    assert_eq!(vbar.len(), grid.len() * n);
    // Constant normal data: stack the H matrices once and reuse the factor.
    let pairs = crate::sym::sym_pairs(n);
    let mut h_stack = DMatrix::zeros(pairs.len(), normals);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (a, h) in lin.sff.h_mats.iter().enumerate() {
            h_stack[(r, a)] = h[(i, j)];
        }
    }
    let scale = h_stack.abs().max();
    if crate::linalg::rank(&h_stack, T::c(1e-10) * scale.max(T::one())) < normals {
        return Err(Error::DegenerateSff(
            "normal components are not determined (rank deficiency)".into(),
        ));
    }

    let mut values = DVector::zeros(grid.len() * big_n);
    let mut projection_residual = T::zero();
    for p in 0..grid.len() {
        let x = grid.point(p);
        let gamma = lin.gamma_jet.gamma_at(&x);
        // Covariant symmetric derivative of the tangential part.
        let dv = |j: usize, i: usize| -> T {
            // ∂_i v̄_j by central/one-sided differences.
            let fetch = |q: usize| vbar[q * n + j];
            let fwd = grid.neighbor(p, i, 1);
            let bwd = grid.neighbor(p, i, -1);
            match (fwd, bwd) {
                (Some(f), Some(b)) => (fetch(f) - fetch(b)) / (T::c(2.0) * grid.spacing),
                (Some(f), None) => (fetch(f) - fetch(p)) / grid.spacing,
                (None, Some(b)) => (fetch(p) - fetch(b)) / grid.spacing,
                (None, None) => T::zero(),
            }
        };
        let hp = h_pert(&x);
        let mut eta = DVector::zeros(pairs.len());
        for (r, &(i, j)) in pairs.iter().enumerate() {
            let mut cov_ij = dv(j, i);
            let mut cov_ji = dv(i, j);
            for k in 0..n {
                cov_ij -= gamma[k][(i, j)] * vbar[p * n + k];
                cov_ji -= gamma[k][(j, i)] * vbar[p * n + k];
            }
            eta[r] = hp[(i, j)] - cov_ij - cov_ji;
        }
        // −2 Σ_α v_α H^α_ij = η_ij.
        let rhs = eta.map(|v| v * T::c(-0.5));
        let v_norm = min_norm_solve(&h_stack, &rhs, T::c(1e-12));
        let defect = (&h_stack * &v_norm - &rhs).abs().max();
        projection_residual = projection_residual.max(defect);
        for j in 0..n {
            values[p * big_n + j] = vbar[p * n + j];
        }
        for a in 0..normals {
            values[p * big_n + n + a] = v_norm[a];
        }
    }
    Ok(Reconstruction {
        values,
        projection_residual,
    })
}
