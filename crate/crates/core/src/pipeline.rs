//! End-to-end pipeline: curvature data at a point to a strongly symmetric
//! positive linearized embedding system.
//!
//! Steps: realize the second fundamental form in normal form (solving the
//! Gauss equations, with a frame change for n = 3), pick the annihilator
//! basis, complete the derivative jets under the Codazzi/derivative
//! constraints, assemble the tangential subsystem, and solve for the change
//! of variables driving its forms to `λ I` and `μ I`.

use crate::curvature::{CurvatureJet2D, CurvatureJet3D};
use crate::embedding::{
    annihilator_basis, check_all_constraints, normal_form_2d, signature_of, solve_gauss_3d,
    ConstraintReport,
};
use crate::linalg::symmetrize;
use crate::positivity::{assemble_q0, assemble_q1};
use crate::transform::{
    apply_transform, assemble_linearization, neighborhood_positivity_radius,
    solve_change_of_vars, ChangeOfVars, ChristoffelJet, EmbeddingLinearization,
};
use crate::{Result, Scalar};

/// Pipeline input: curvature at a point.
#[derive(Clone, Debug)]
pub enum PipelineCurvature<T: Scalar> {
    TwoD(CurvatureJet2D<T>),
    ThreeD {
        curv: CurvatureJet3D<T>,
        /// Normal-form parameter; defaults to `0.3` adjusted by the sign
        /// rule for rank-one curvature.
        sigma: Option<T>,
    },
}

/// Outcome of the pipeline with its verification data.
#[derive(Clone)]
pub struct PipelineReport<T: Scalar> {
    pub n: usize,
    pub sigma: Option<T>,
    pub lambda: T,
    pub mu: T,
    pub cov: ChangeOfVars<T>,
    pub lin: EmbeddingLinearization<T>,
    /// `max |Q̃0 − λI|` from the closed formulas.
    pub q0_deviation: T,
    /// `max |Q̃1 − μI|` from the closed formulas.
    pub q1_deviation: T,
    /// Same deviations measured by finite differences on the transformed
    /// fields; an independent route through the product formula.
    pub q0_deviation_fd: T,
    pub q1_deviation_fd: T,
    pub constraints: ConstraintReport<T>,
    /// Radius within which the transformed forms keep half their targets;
    /// `None` when the (optional) search was skipped, zero when positivity
    /// already fails at the probe floor.
    pub positivity_radius: Option<T>,
}

/// Default normal-form parameter adjusted by the sign rule.
pub fn default_sigma<T: Scalar>(curv: &CurvatureJet3D<T>) -> T {
    match signature_of(curv.rhat()) {
        (1, 0) => T::c(-0.3),
        _ => T::c(0.3),
    }
}

pub fn run_pipeline<T: Scalar>(
    input: &PipelineCurvature<T>,
    lambda: T,
    mu: T,
) -> Result<PipelineReport<T>> {
    run_pipeline_opts(input, lambda, mu, true)
}

/// As [`run_pipeline`], optionally skipping the neighborhood-radius search
/// (it is a report field, not part of the origin certificate).
pub fn run_pipeline_opts<T: Scalar>(
    input: &PipelineCurvature<T>,
    lambda: T,
    mu: T,
    compute_radius: bool,
) -> Result<PipelineReport<T>> {
    match input {
        PipelineCurvature::TwoD(curv) => {
            let (sff, annih) = normal_form_2d(curv.k)?;
            let (sff, annih) = crate::embedding::solve_derivative_constraints(
                Some(curv),
                None,
                &sff,
                &annih,
                lambda,
            )?;
            let constraints = check_all_constraints(Some(curv), None, &sff, &annih)?;
            let lin = assemble_linearization(&sff, &annih, ChristoffelJet::zero(2), None, lambda)?;
            finish(lin, None, lambda, mu, constraints, compute_radius)
        }
        PipelineCurvature::ThreeD { curv, sigma } => {
            let sigma = sigma.unwrap_or_else(|| default_sigma(curv));
            let sff = solve_gauss_3d(curv, sigma)?;
            let curv_nf = curv.pullback(&sff.frame)?;
            let annih = annihilator_basis(&sff)?;
            let (sff, annih) = crate::embedding::solve_derivative_constraints(
                None,
                Some(&curv_nf),
                &sff,
                &annih,
                lambda,
            )?;
            let constraints = check_all_constraints(None, Some(&curv_nf), &sff, &annih)?;
            let lin = assemble_linearization(&sff, &annih, ChristoffelJet::zero(3), None, lambda)?;
            finish(lin, Some(sigma), lambda, mu, constraints, compute_radius)
        }
    }
}

fn finish<T: Scalar>(
    lin: EmbeddingLinearization<T>,
    sigma: Option<T>,
    lambda: T,
    mu: T,
    constraints: ConstraintReport<T>,
    compute_radius: bool,
) -> Result<PipelineReport<T>> {
    let n = lin.n;
    let cov = solve_change_of_vars(&lin, lambda, mu)?;
    let q0 = crate::transform::q0_formula(&lin, &cov);
    let q1 = crate::transform::q1_formula(&lin, &cov);
    let eye_n = nalgebra::DMatrix::<T>::identity(n, n);
    let eye_nn = nalgebra::DMatrix::<T>::identity(n * n, n * n);
    let q0_deviation = (&q0 - &eye_n * lambda).abs().max();
    let q1_deviation = (&q1 - &eye_nn * mu).abs().max();

    let transformed = apply_transform(&lin, &cov)?;
    let origin = vec![T::zero(); n];
    let fd = T::c(1e-6);
    let q0_fd = assemble_q0(&transformed, &origin, fd)?;
    let q1_fd = assemble_q1(&transformed, &origin, fd)?;
    let q0_deviation_fd = (symmetrize(&q0_fd) - &eye_n * lambda).abs().max();
    let q1_deviation_fd = (&q1_fd - &eye_nn * mu).abs().max();

    let positivity_radius = if compute_radius {
        Some(neighborhood_positivity_radius(
            &transformed,
            lambda,
            mu,
            T::c(0.5),
            T::one(),
        )?)
    } else {
        None
    };
    Ok(PipelineReport {
        n,
        sigma,
        lambda,
        mu,
        cov,
        lin,
        q0_deviation,
        q1_deviation,
        q0_deviation_fd,
        q1_deviation_fd,
        constraints,
        positivity_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_d_pipeline_all_curvatures() {
        for k in [1.0, -1.0, 5.0, -0.1] {
            for (k1, k2) in [(0.0, 0.0), (1.0, -2.0)] {
                let input = PipelineCurvature::TwoD(CurvatureJet2D { k, k1, k2 });
                let rep = run_pipeline(&input, 1.0, 1.0).unwrap();
                assert!(
                    rep.q0_deviation < 1e-9 && rep.q1_deviation < 1e-9,
                    "K {k}: q0 {} q1 {}",
                    rep.q0_deviation,
                    rep.q1_deviation
                );
                assert!(
                    rep.q0_deviation_fd < 1e-8 && rep.q1_deviation_fd < 1e-8,
                    "K {k}: fd deviations {} {}",
                    rep.q0_deviation_fd,
                    rep.q1_deviation_fd
                );
                assert!(rep.constraints.max() < 1e-9);
                assert!(rep.positivity_radius.unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn three_d_pipeline_identity_curvature() {
        let curv = CurvatureJet3D::new(DMatrix::identity(3, 3), [0.0; 15]).unwrap();
        let input = PipelineCurvature::ThreeD { curv, sigma: None };
        let rep = run_pipeline(&input, 1.0, 1.0).unwrap();
        assert!(rep.q0_deviation < 1e-8, "q0 {}", rep.q0_deviation);
        assert!(rep.q1_deviation < 1e-8, "q1 {}", rep.q1_deviation);
        assert!(rep.constraints.max() < 1e-8, "{:?}", rep.constraints);
    }

    #[test]
    fn three_d_pipeline_random_congruence_and_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let base = crate::embedding::equiangular_rhat(0.25, 0.3);
        let p = DMatrix::from_fn(3, 3, |_, _| crate::net::standard_normal(&mut rng));
        let rhat = p.transpose() * &base * &p;
        let mut r = [0.0_f64; 15];
        for v in r.iter_mut() {
            *v = 0.5 * crate::net::standard_normal(&mut rng);
        }
        let curv = CurvatureJet3D::new(rhat, r).unwrap();
        let input = PipelineCurvature::ThreeD { curv, sigma: None };
        let rep = run_pipeline(&input, 1.0, 1.0).unwrap();
        assert!(rep.q0_deviation < 1e-8 && rep.q1_deviation < 1e-8);
        assert!(rep.constraints.max() < 1e-8, "{:?}", rep.constraints);
        assert_eq!(rep.sigma, Some(0.3));
    }

    #[test]
    fn sign_rule_defaults() {
        let pos = CurvatureJet3D::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0])),
            [0.0; 15],
        )
        .unwrap();
        assert_eq!(default_sigma(&pos), -0.3);
        let neg = CurvatureJet3D::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 0.0, 0.0])),
            [0.0; 15],
        )
        .unwrap();
        assert_eq!(default_sigma(&neg), 0.3);
    }
}
