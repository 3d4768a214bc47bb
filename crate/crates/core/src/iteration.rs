//! Newton-type iteration with smoothing: each step applies an approximate
//! right inverse of the linearization to the current residual, then smooths
//! the correction with a scale that grows double-exponentially,
//! `t_m = t0^(κ^m)`.  The smoothing compensates the loss of derivatives the
//! right inverse may incur, which is what the tame estimate
//! `‖R(u) h‖_k ≤ C_k (‖h‖_{k+α} + ‖h‖_α ‖u − u0‖_{k+α})` quantifies.

use nalgebra::DVector;

use crate::smoothing::{NormLadder, Smoother};
use crate::{Error, Result, Scalar};

/// A nonlinear operator on grid functions.
pub type GridOperator<T> = dyn Fn(&DVector<T>) -> DVector<T>;
/// An approximate right inverse of the linearization at the first argument.
pub type RightInverse<T> = dyn Fn(&DVector<T>, &DVector<T>) -> Result<DVector<T>>;

/// Schedule and budget of the iteration.
#[derive(Clone, Debug)]
pub struct IterationConfig<T: Scalar> {
    /// Loss-of-derivatives index used by the admissibility check.
    pub alpha: usize,
    /// Budget on the initial residual `‖f − Φ(u0)‖_alpha`.
    pub epsilon: T,
    pub t0: T,
    pub kappa: T,
    pub max_iters: usize,
    /// Stop when the order-zero residual norm falls below this.
    pub tol: T,
}

impl<T: Scalar> IterationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.t0 <= T::one() {
            return Err(Error::ParameterOutOfRange("t0 must exceed 1".into()));
        }
        if self.kappa <= T::one() || self.kappa >= T::c(2.0) {
            return Err(Error::ParameterOutOfRange(
                "kappa must lie in (1, 2)".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for IterationConfig<T> {
    fn default() -> Self {
        IterationConfig {
            alpha: 1,
            epsilon: T::c(1e-2),
            t0: T::c(2.0),
            kappa: T::c(1.5),
            max_iters: 30,
            tol: T::c(1e-12),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationStatus {
    Converged,
    MaxIters,
    Diverged,
}

/// Full record of an iteration run; identical inputs produce bit-identical
/// histories.
#[derive(Clone, Debug)]
pub struct IterationHistory<T: Scalar> {
    pub u: DVector<T>,
    /// Order-zero residual norms, including the initial one.
    pub residuals: Vec<T>,
    pub status: IterationStatus,
}

/// Run `u_{m+1} = u_m + S(t_m) R(u_m)(f − Φ(u_m))`.
///
/// `phi` evaluates the nonlinear operator on grid functions and
/// `right_inverse(u, h)` applies an approximate right inverse of its
/// linearization at `u`.  Monotone decrease of the residual is not
/// guaranteed and is reported as measured.
pub fn iterate<T: Scalar>(
    phi: &GridOperator<T>,
    right_inverse: &RightInverse<T>,
    u0: &DVector<T>,
    f: &DVector<T>,
    ladder: &NormLadder<T>,
    smoother: &Smoother,
    config: &IterationConfig<T>,
) -> Result<IterationHistory<T>> {
    config.validate()?;
    let alpha = config.alpha.min(ladder.k_max);
    let mut u = u0.clone();
    let initial = f - phi(&u);
    let initial_alpha = ladder.norm(&initial, alpha);
    if initial_alpha >= config.epsilon {
        return Err(Error::ParameterOutOfRange(format!(
            "initial residual {} exceeds the closeness budget {}",
            initial_alpha.to_real(),
            config.epsilon.to_real()
        )));
    }
    let mut residuals = vec![ladder.norm(&initial, 0)];
    let mut t = config.t0;
    let mut status = IterationStatus::MaxIters;
    for _ in 0..config.max_iters {
        let res = f - phi(&u);
        let r0 = ladder.norm(&res, 0);
        if r0 <= config.tol {
            status = IterationStatus::Converged;
            break;
        }
        if !r0.is_finite() || r0 > T::c(1e6) * (residuals[0] + T::c(1e-30)) {
            status = IterationStatus::Diverged;
            break;
        }
        let correction = right_inverse(&u, &res)?;
        // Once the kernel radius 1/t drops below the spacing the smoothing
        // is the identity; apply it only while it acts.
        let smoothed = if T::one() / t >= ladder.grid.spacing
            && T::one() / t <= ladder.grid.radius
        {
            smoother.smooth(&ladder.grid, &correction, ladder.s, t)?
        } else {
            correction
        };
        u += smoothed;
        residuals.push(ladder.norm(&(f - phi(&u)), 0));
        t = t.powf(config.kappa);
    }
    if status == IterationStatus::MaxIters && *residuals.last().unwrap() <= config.tol {
        status = IterationStatus::Converged;
    }
    Ok(IterationHistory {
        u,
        residuals,
        status,
    })
}

/// Measured tame constant: the supremum over samples of
/// `‖R(u) h‖_k / (‖h‖_{k+α} + ‖h‖_α ‖u − u0‖_{k+α})`.
pub fn tame_check<T: Scalar>(
    right_inverse: &RightInverse<T>,
    samples: &[(DVector<T>, DVector<T>)],
    u0: &DVector<T>,
    k: usize,
    alpha: usize,
    ladder: &NormLadder<T>,
) -> Result<T> {
    assert!(k + alpha <= ladder.k_max);
    let mut c_k = T::zero();
    for (u, h) in samples {
        let denom = ladder.norm(h, k + alpha)
            + ladder.norm(h, alpha) * ladder.norm(&(u - u0), k + alpha);
        if denom == T::zero() {
            continue;
        }
        let ru = right_inverse(u, h)?;
        c_k = c_k.max(ladder.norm(&ru, k) / denom);
    }
    Ok(c_k)
}

/// Named model problems for the command-line demonstration.
pub struct ModelProblem<T: Scalar> {
    pub name: &'static str,
    pub phi: Box<GridOperator<T>>,
    pub right_inverse: Box<RightInverse<T>>,
}

pub fn model_problem<T: Scalar>(name: &str) -> Result<ModelProblem<T>> {
    match name {
        // Pointwise linear map with exact inverse: Newton converges in one
        // step up to smoothing error.
        "linear" => Ok(ModelProblem {
            name: "linear",
            phi: Box::new(|u: &DVector<T>| u * T::c(2.0)),
            right_inverse: Box::new(|_u, h| Ok(h * T::c(0.5))),
        }),
        // Pointwise Φ(u) = u + u² with the exact derivative inverse
        // h / (1 + 2u).
        "quadratic" => Ok(ModelProblem {
            name: "quadratic",
            phi: Box::new(|u: &DVector<T>| {
                DVector::from_fn(u.len(), |i, _| u[i] + u[i] * u[i])
            }),
            right_inverse: Box::new(|u, h| {
                let denom_min = u.iter().fold(T::c(f64::INFINITY), |a, v| {
                    a.min((T::one() + T::c(2.0) * *v).abs())
                });
                if denom_min < T::c(1e-12) {
                    return Err(Error::SolveFailed(
                        "linearization of the quadratic model is singular".into(),
                    ));
                }
                Ok(DVector::from_fn(h.len(), |i, _| {
                    h[i] / (T::one() + T::c(2.0) * u[i])
                }))
            }),
        }),
        other => Err(Error::InvalidInput(format!(
            "unknown model problem `{other}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn ladder() -> NormLadder<f64> {
        NormLadder::new(Grid::ball(1, 1.0, 0.02).unwrap(), 1, 3)
    }

    #[test]
    fn linear_model_converges_in_one_smoothed_step() {
        let l = ladder();
        let model = model_problem::<f64>("linear").unwrap();
        let u0 = DVector::zeros(l.grid.len());
        let f = l.grid.sample(|x| 1e-3 * (2.0 * x[0]).sin());
        let config = IterationConfig {
            tol: 1e-14,
            ..IterationConfig::default()
        };
        let hist = iterate(
            model.phi.as_ref(),
            model.right_inverse.as_ref(),
            &u0,
            &f,
            &l,
            &Smoother,
            &config,
        )
        .unwrap();
        assert_eq!(hist.status, IterationStatus::Converged);
        // After one step the residual equals the smoothing error of the
        // correction: ‖Φ'(I − S(t0)) correction‖.
        let correction = &f * 0.5;
        let smoothed = Smoother.smooth(&l.grid, &correction, 1, 2.0).unwrap();
        let bound = 2.0 * l.norm(&(correction - smoothed), 0);
        assert!(
            hist.residuals[1] <= bound + 1e-14,
            "{} > {}",
            hist.residuals[1],
            bound
        );
    }

    #[test]
    fn quadratic_model_reaches_tight_residual() {
        let l = ladder();
        let model = model_problem::<f64>("quadratic").unwrap();
        let u0 = DVector::zeros(l.grid.len());
        let f = l.grid.sample(|x| 1e-3 * (x[0] * 1.3).cos());
        let config = IterationConfig {
            max_iters: 8,
            tol: 1e-10,
            ..IterationConfig::default()
        };
        let hist = iterate(
            model.phi.as_ref(),
            model.right_inverse.as_ref(),
            &u0,
            &f,
            &l,
            &Smoother,
            &config,
        )
        .unwrap();
        assert_eq!(hist.status, IterationStatus::Converged);
        assert!(hist.residuals.len() <= 9);
        assert!(*hist.residuals.last().unwrap() <= 1e-8);
    }

    #[test]
    fn fixed_point_returns_initial_guess() {
        let l = ladder();
        let model = model_problem::<f64>("quadratic").unwrap();
        let u0 = l.grid.sample(|x| 0.01 * x[0]);
        let f = (model.phi)(&u0);
        let hist = iterate(
            model.phi.as_ref(),
            model.right_inverse.as_ref(),
            &u0,
            &f,
            &l,
            &Smoother,
            &IterationConfig::default(),
        )
        .unwrap();
        assert_eq!(hist.status, IterationStatus::Converged);
        assert!((hist.u - u0).abs().max() < 1e-14);
    }

    #[test]
    fn histories_are_deterministic() {
        let l = ladder();
        let model = model_problem::<f64>("quadratic").unwrap();
        let u0 = DVector::zeros(l.grid.len());
        let f = l.grid.sample(|x| 1e-3 * (3.0 * x[0]).sin());
        let run = || {
            iterate(
                model.phi.as_ref(),
                model.right_inverse.as_ref(),
                &u0,
                &f,
                &l,
                &Smoother,
                &IterationConfig::default(),
            )
            .unwrap()
        };
        let h1 = run();
        let h2 = run();
        assert_eq!(h1.residuals, h2.residuals);
        assert_eq!(h1.u, h2.u);
    }

    #[test]
    fn budget_violation_is_rejected() {
        let l = ladder();
        let model = model_problem::<f64>("quadratic").unwrap();
        let u0 = DVector::zeros(l.grid.len());
        let f = l.grid.sample(|_| 10.0);
        let config = IterationConfig {
            epsilon: 1e-3,
            ..IterationConfig::default()
        };
        assert!(iterate(
            model.phi.as_ref(),
            model.right_inverse.as_ref(),
            &u0,
            &f,
            &l,
            &Smoother,
            &config,
        )
        .is_err());
    }

    #[test]
    fn tame_constant_of_constant_coefficient_inverse() {
        let l = ladder();
        let model = model_problem::<f64>("linear").unwrap();
        let u0 = DVector::zeros(l.grid.len());
        let samples: Vec<(DVector<f64>, DVector<f64>)> = (0..4)
            .map(|k| {
                let u = l.grid.sample(|x| 0.1 * (k as f64) * x[0]);
                let h = l.grid.sample(|x| ((k + 1) as f64 * x[0]).sin());
                (u, h)
            })
            .collect();
        let c0 = tame_check(model.right_inverse.as_ref(), &samples, &u0, 0, 1, &l).unwrap();
        assert!(c0.is_finite() && c0 > 0.0 && c0 <= 0.5 + 1e-12);
        // Zero data contributes nothing.
        let zero = DVector::zeros(l.grid.len());
        let czero = tame_check(
            model.right_inverse.as_ref(),
            &[(zero.clone(), zero)],
            &u0,
            0,
            1,
            &l,
        )
        .unwrap();
        assert_eq!(czero, 0.0);
    }
}
