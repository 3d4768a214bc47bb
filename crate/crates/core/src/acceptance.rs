//! The acceptance suite: twelve numbered criteria covering the certificate
//! algebra, the pipelines, the discrete solvers, and the iteration building
//! blocks, each with pinned tolerances.  Every criterion returns a
//! machine-readable report; the runner never weakens a tolerance to pass.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::certificate::gbar_rank_certificate;
use crate::curvature::{CurvatureJet2D, CurvatureJet3D};
use crate::embedding::{equiangular_rhat, rhat_example, signature_of};
use crate::extension::{build_extended_system, find_p_convex_radius, taylor_split};
use crate::field::{LinearSystemField, VectorField};
use crate::grid::Grid;
use crate::io::builtin_system;
use crate::iteration::{iterate, model_problem, tame_check, IterationConfig, IterationStatus};
use crate::net::standard_normal;
use crate::pipeline::{run_pipeline, run_pipeline_opts, PipelineCurvature};
use crate::report::{dec, dec_vec, AcceptanceJson, CriterionJson};
use crate::smoothing::{NormLadder, Smoother};
use crate::solver::{solve_linear, verify_l2_estimate};
use crate::transform::{apply_transform, q0_formula, q1_formula, ChangeOfVars};
use crate::{Real, Result};
use std::sync::Arc;

/// Run the full suite.  The final criterion replays the first eleven and
/// compares the serialized reports byte for byte.
pub fn run_all() -> Result<AcceptanceJson> {
    let first = run_once()?;
    let second = run_once()?;
    let bytes_first = serde_json::to_vec(&first).expect("serialize");
    let bytes_second = serde_json::to_vec(&second).expect("serialize");
    let identical = bytes_first == bytes_second;
    let mut criteria = first;
    criteria.push(CriterionJson {
        id: 12,
        name: "determinism: repeated runs produce byte-identical reports".into(),
        passed: identical,
        details: json!({
            "bytes": bytes_first.len(),
            "identical": identical,
        }),
    });
    let passed = criteria.iter().filter(|c| c.passed).count();
    let failed = criteria.len() - passed;
    Ok(AcceptanceJson {
        all_passed: failed == 0,
        passed,
        failed,
        criteria,
    })
}

fn run_once() -> Result<Vec<CriterionJson>> {
    Ok(vec![
        c1_determinant_certificate()?,
        c2_eigenvalue_identity()?,
        c3_signature_table()?,
        c4_pipeline_2d()?,
        c5_pipeline_3d()?,
        c6_transform_cross_check()?,
        c7_singular_ode()?,
        c8_extension_p_convexity()?,
        c9_energy_estimate()?,
        c10_smoothing_constants()?,
        c11_iteration_model_problem()?,
    ])
}

fn c1_determinant_certificate() -> Result<CriterionJson> {
    let sigmas: [Real; 6] = [0.1, 0.25, 0.4, -0.1, -0.25, -0.4];
    let mut rows = Vec::new();
    let mut passed = true;
    for sigma in sigmas {
        let cert = gbar_rank_certificate(sigma)?;
        let rel_closed =
            (cert.det_submatrix - cert.closed_form).abs() / cert.closed_form.abs();
        let rel_factored =
            (cert.det_submatrix - cert.det_factored).abs() / cert.det_factored.abs();
        let rank_ok = cert.rank == 15;
        let det_ok = rel_closed <= 1e-10;
        passed &= rank_ok && det_ok;
        rows.push(json!({
            "sigma": dec(sigma),
            "rank": cert.rank,
            "rank_ok": rank_ok,
            "det_submatrix": dec(cert.det_submatrix),
            "closed_form": dec(cert.closed_form),
            "rel_deviation_from_closed_form": dec(rel_closed),
            "det_ok": det_ok,
            "det_factored_form": dec(cert.det_factored),
            "rel_deviation_from_factored_form": dec(rel_factored),
        }));
    }
    Ok(CriterionJson {
        id: 1,
        name: "determinant certificate: rank 15 and closed-form determinant".into(),
        passed,
        details: json!({
            "tolerance": "1e-10 relative",
            "note": "the measured determinant of the designated submatrix \
                     reproduces the factored form with one extra factor of \
                     sigma^2+sigma+1 to 1e-12; the stated closed form is \
                     therefore not attained and the det clause fails while \
                     rank 15 holds",
            "cases": rows,
        }),
    })
}

fn c2_eigenvalue_identity() -> Result<CriterionJson> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut max_dev: Real = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let phi = -0.499 + 1.497 * uniform(&mut rng);
        let mag = 0.01 + 0.47 * uniform(&mut rng);
        let sigma = if uniform(&mut rng) < 0.5 { -mag } else { mag };
        let ex = rhat_example(phi, sigma)?;
        for i in 0..3 {
            max_dev = max_dev
                .max((ex.closed_form_eigenvalues[i] - ex.numeric_eigenvalues[i]).abs());
        }
    }
    let passed = max_dev <= 1e-10;
    Ok(CriterionJson {
        id: 2,
        name: "eigenvalue identity of the equiangular curvature family".into(),
        passed,
        details: json!({
            "cases": cases,
            "max_deviation": dec(max_dev),
            "tolerance": "1e-10",
        }),
    })
}

fn c3_signature_table() -> Result<CriterionJson> {
    let sweep = |sigma: Real| -> Result<Vec<(usize, usize)>> {
        // boundaries of the middle interval depend on the sign of sigma
        let lower = -0.5;
        let b1 = sigma * (sigma + 2.0) / (1.0 + 2.0 * sigma * sigma);
        let b2 = -sigma / (sigma + 1.0);
        let (first, second) = if sigma > 0.0 { (b2, b1) } else { (b1, b2) };
        let phis = [
            (lower + first) / 2.0,
            first,
            (first + second) / 2.0,
            second,
            (second + 1.0) / 2.0,
        ];
        phis.iter()
            .map(|&phi| Ok(signature_of(&equiangular_rhat(phi, sigma))))
            .collect()
    };
    let pos = sweep(0.3)?;
    let neg = sweep(-0.25)?;
    let expected_pos = vec![(0, 3), (0, 1), (2, 1), (2, 0), (3, 0)];
    let expected_neg = vec![(0, 3), (0, 2), (1, 2), (1, 0), (3, 0)];
    let passed = pos == expected_pos && neg == expected_neg;
    Ok(CriterionJson {
        id: 3,
        name: "signature sequence across the five parameter intervals".into(),
        passed,
        details: json!({
            "sigma_positive": { "sigma": "0.3", "expected": expected_pos, "observed": pos },
            "sigma_negative": { "sigma": "-0.25", "expected": expected_neg, "observed": neg },
        }),
    })
}

fn c4_pipeline_2d() -> Result<CriterionJson> {
    let mut rows = Vec::new();
    let mut passed = true;
    for k in [1.0, -1.0, 5.0, -0.1] {
        for (k1, k2) in [(0.0, 0.0), (1.0, -2.0)] {
            let rep = run_pipeline(
                &PipelineCurvature::TwoD(CurvatureJet2D { k, k1, k2 }),
                1.0,
                1.0,
            )?;
            let ok = rep.q0_deviation <= 1e-9
                && rep.q1_deviation <= 1e-9
                && rep.constraints.max() <= 1e-9;
            passed &= ok;
            rows.push(json!({
                "K": dec(k), "k1": dec(k1), "k2": dec(k2),
                "q0_deviation": dec(rep.q0_deviation),
                "q1_deviation": dec(rep.q1_deviation),
                "q0_deviation_fd": dec(rep.q0_deviation_fd),
                "q1_deviation_fd": dec(rep.q1_deviation_fd),
                "constraints_max": dec(rep.constraints.max()),
                "positivity_radius": rep.positivity_radius.map(dec),
                "ok": ok,
            }));
        }
    }
    Ok(CriterionJson {
        id: 4,
        name: "2-D pipeline reaches identity forms with clean constraints".into(),
        passed,
        details: json!({ "tolerance": "1e-9", "cases": rows }),
    })
}

fn c5_pipeline_3d() -> Result<CriterionJson> {
    // One representative of every nonzero signature: through the equiangular
    // family where it realizes the signature, canonical diagonal otherwise.
    let reps: Vec<((usize, usize), DMatrix<Real>)> = {
        let s_pos = 0.3;
        let s_neg = -0.25;
        let b1p = s_pos * (s_pos + 2.0) / (1.0 + 2.0 * s_pos * s_pos);
        let b2p = -s_pos / (s_pos + 1.0);
        let b1n = s_neg * (s_neg + 2.0) / (1.0 + 2.0 * s_neg * s_neg);
        let b2n = -s_neg / (s_neg + 1.0);
        vec![
            ((3, 0), equiangular_rhat((b1p + 1.0) / 2.0, s_pos)),
            ((2, 1), equiangular_rhat((b2p + b1p) / 2.0, s_pos)),
            ((1, 2), equiangular_rhat((b1n + b2n) / 2.0, s_neg)),
            ((0, 3), equiangular_rhat((-0.5 + b2p) / 2.0, s_pos)),
            ((2, 0), equiangular_rhat(b1p, s_pos)),
            (
                (1, 1),
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0])),
            ),
            ((0, 2), equiangular_rhat(b1n, s_neg)),
            ((1, 0), equiangular_rhat(b2n, s_neg)),
            ((0, 1), equiangular_rhat(b2p, s_pos)),
        ]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut rows = Vec::new();
    let mut passed = true;
    for (signature, rhat) in reps {
        for source in ["equiangular", "congruence"] {
            let sample = if source == "equiangular" {
                rhat.clone()
            } else {
                // Random congruence preserves the signature exactly.
                loop {
                    let p = DMatrix::from_fn(3, 3, |_, _| standard_normal(&mut rng));
                    if p.determinant().abs() > 0.3 {
                        break p.transpose() * &rhat * p;
                    }
                }
            };
            let mut r = [0.0; 15];
            if source == "congruence" {
                for v in r.iter_mut() {
                    *v = 0.5 * standard_normal(&mut rng);
                }
            }
            let curv = CurvatureJet3D::new(sample, r)?;
            let observed = signature_of(curv.rhat());
            let rep = run_pipeline_opts(
                &PipelineCurvature::ThreeD { curv, sigma: None },
                1.0,
                1.0,
                false,
            )?;
            let ok = rep.q0_deviation <= 1e-8
                && rep.q1_deviation <= 1e-8
                && rep.constraints.max() <= 1e-8
                && observed == signature;
            passed &= ok;
            rows.push(json!({
                "signature": signature,
                "source": source,
                "derivatives": if source == "congruence" { "random" } else { "zero" },
                "sigma": rep.sigma.map(dec),
                "q0_deviation": dec(rep.q0_deviation),
                "q1_deviation": dec(rep.q1_deviation),
                "constraints_max": dec(rep.constraints.max()),
                "ok": ok,
            }));
        }
    }
    Ok(CriterionJson {
        id: 5,
        name: "3-D pipeline over every nonzero curvature signature".into(),
        passed,
        details: json!({ "tolerance": "1e-8", "cases": rows }),
    })
}

fn c6_transform_cross_check() -> Result<CriterionJson> {
    let rep = run_pipeline(
        &PipelineCurvature::TwoD(CurvatureJet2D {
            k: 1.0,
            k1: 0.0,
            k2: 0.0,
        }),
        1.0,
        1.0,
    )?;
    let lin = &rep.lin;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut max_q0: Real = 0.0;
    let mut max_q1: Real = 0.0;
    for _ in 0..50 {
        let mut cov = ChangeOfVars::identity(2, 1.0, 1.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in j..2 {
                    let v = 0.5 * standard_normal(&mut rng);
                    cov.c[i][(j, k)] = v;
                    cov.c[i][(k, j)] = v;
                }
                for q in 0..2 {
                    cov.s[i][(j, q)] = 0.5 * standard_normal(&mut rng);
                }
            }
        }
        let sys = apply_transform(lin, &cov)?;
        let q0_d = crate::positivity::assemble_q0(&sys, &[0.0, 0.0], 1e-6)?;
        let q1_d = crate::positivity::assemble_q1(&sys, &[0.0, 0.0], 1e-6)?;
        max_q0 = max_q0.max((q0_formula(lin, &cov) - q0_d).abs().max());
        max_q1 = max_q1.max((q1_formula(lin, &cov) - q1_d).abs().max());
    }
    let passed = max_q0 <= 1e-8 && max_q1 <= 1e-8;
    Ok(CriterionJson {
        id: 6,
        name: "transformed forms: closed formulas versus finite differences".into(),
        passed,
        details: json!({
            "samples": 50,
            "max_q0_gap": dec(max_q0),
            "max_q1_gap": dec(max_q1),
            "tolerance": "1e-8",
        }),
    })
}

fn c7_singular_ode() -> Result<CriterionJson> {
    let spec: crate::ode::OdeSpec<Real> = crate::ode::OdeSpec::new(0.0, 2.0, Arc::new(|_| 1.0));
    let (_, solution, residual) = crate::ode::solve_no_bc(&spec, (-1.0, 1.0), 2001)?;
    let max_error = solution
        .iter()
        .map(|u| (u - 0.5).abs())
        .fold(0.0, Real::max);
    let demo = crate::ode::uniqueness_demo(&spec, (1.0, 2.0), 101)?;
    let kernel_sv = demo.smallest_singular_values[0];
    let next_sv = demo.smallest_singular_values[1];
    let gap = next_sv / kernel_sv.max(1e-300);
    let passed = max_error <= 1e-4
        && demo.solution_space_dim == 1
        && kernel_sv < 1e-8
        && gap >= 1e2;
    Ok(CriterionJson {
        id: 7,
        name: "singular model equation: uniqueness inside, kernel outside".into(),
        passed,
        details: json!({
            "interior_solve": {
                "grid": "spacing 1e-3 on (-1, 1)",
                "max_error_vs_half": dec(max_error),
                "residual": dec(residual),
                "tolerance": "1e-4",
            },
            "exterior_kernel": {
                "grid": "spacing 1e-2 on (1, 2)",
                "solution_space_dim": demo.solution_space_dim,
                "kernel_singular_value": dec(kernel_sv),
                "next_singular_value": dec(next_sv),
                "gap": dec(gap),
            },
        }),
    })
}

fn c8_extension_p_convexity() -> Result<CriterionJson> {
    let mut rows = Vec::new();
    let mut passed = true;
    let cases: Vec<(&str, LinearSystemField<Real>)> = vec![
        ("singular-ode-shifted", builtin_system("singular-ode-shifted")?),
        ("manufactured-2d", builtin_system("manufactured-2d")?),
    ];
    for (name, sys) in cases {
        let jet = taylor_split(&sys, &vec![0.0; sys.n])?;
        let ext = build_extended_system(&jet, 1.0)?;
        let q_ok = ext.measured_q0_min >= ext.lambda0_half - 1e-7
            && ext.measured_q1_min >= ext.lambda1_half - 1e-7;
        let candidates: Vec<Real> = (1..=16).map(|k| 0.25 * k as Real).collect();
        let pcr = find_p_convex_radius(&ext, &candidates, 1e-10)?;
        let growth_ok = pcr
            .growth
            .iter()
            .filter(|(r, _, _)| *r >= pcr.radius)
            .all(|(_, measured, bound)| measured >= bound);
        passed &= q_ok && growth_ok;
        rows.push(json!({
            "system": name,
            "r": dec(ext.r),
            "lambda0_half": dec(ext.lambda0_half),
            "lambda1_half": dec(ext.lambda1_half),
            "measured_q0_min": dec(ext.measured_q0_min),
            "measured_q1_min": dec(ext.measured_q1_min),
            "positivity_halves_hold": q_ok,
            "p_convex_radius": dec(pcr.radius),
            "boundary_min_eigenvalue": dec(pcr.min_boundary_eigenvalue),
            "growth_bound_holds": growth_ok,
        }));
    }
    Ok(CriterionJson {
        id: 8,
        name: "extension keeps half the point positivity and yields a P-convex ball".into(),
        passed,
        details: json!({ "cases": rows }),
    })
}

fn manufactured_energy_system() -> LinearSystemField<Real> {
    let mut sys = LinearSystemField::manufactured_2d(3.0);
    sys.h = VectorField::callable(
        1,
        Arc::new(|x: &[Real]| {
            let phase = 2.0 * x[0] + x[1];
            DVector::from_row_slice(&[
                x[0] * 2.0 * phase.cos() + x[1] * phase.cos() + 3.0 * phase.sin(),
            ])
        }),
    );
    sys
}

fn c9_energy_estimate() -> Result<CriterionJson> {
    let sys = manufactured_energy_system();
    let mut rows = Vec::new();
    let mut passed = true;
    for spacing in [0.2, 0.1, 0.05] {
        let grid = Grid::ball(2, 1.0, spacing)?;
        let sol = solve_linear(&sys, &grid, 1)?;
        let rep = verify_l2_estimate(&sys, &grid, &sol, 0.1)?;
        let balance_ok = rep.balance_residual <= 10.0 * spacing;
        passed &= rep.holds && balance_ok;
        rows.push(json!({
            "spacing": dec(spacing),
            "lambda0": dec(rep.lambda0),
            "norm_v": dec(rep.lhs),
            "bound": dec(rep.rhs * 1.1),
            "estimate_holds": rep.holds,
            "boundary_flux": dec(rep.boundary_flux),
            "balance_residual": dec(rep.balance_residual),
            "balance_bound": dec(10.0 * spacing),
            "balance_ok": balance_ok,
        }));
    }
    Ok(CriterionJson {
        id: 9,
        name: "discrete energy estimate and identity balance".into(),
        passed,
        details: json!({ "slack": "10%", "cases": rows }),
    })
}

fn c10_smoothing_constants() -> Result<CriterionJson> {
    // Interpretation of the pairs: (a, b) with a <= b measures the decay
    // ratio of family (1); (a, b) with a > b measures the gain ratio of
    // family (2) with (i, j) = (b, a).
    let pairs = [(0usize, 0usize), (0, 1), (1, 0), (1, 2)];
    // Scales kept coarse enough that the kernel stays resolved (at least
    // six nodes across its support) on both grids, and probe frequencies
    // resolved in the highest norm used.
    let t_values = [2.0, 4.0, 8.0];
    let smoother = Smoother;
    let mut per_grid = Vec::new();
    for spacing in [0.02, 0.01] {
        let ladder: NormLadder<Real> = NormLadder::new(Grid::ball(1, 1.0, spacing)?, 1, 3);
        let probes = vec![
            ladder.grid.sample(|x| (x[0]).sin()),
            ladder.grid.sample(|x| (5.0 * x[0]).sin()),
            ladder.grid.sample(|x| (12.0 * x[0]).sin()),
            ladder.grid.sample(|x| (3.0 * x[0]).cos() + x[0] * x[0]),
        ];
        let mut values = Vec::new();
        for &(a, b) in &pairs {
            let (i, j, use_gain) = if a <= b { (a, b, false) } else { (b, a, true) };
            let est = crate::smoothing::verify_smoothing_estimates(
                &ladder,
                &smoother,
                &probes,
                &[(i, j)],
                &t_values,
            )?;
            values.push(if use_gain {
                est[0].m_gain
            } else {
                est[0].m_decay
            });
        }
        per_grid.push(values);
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let coarse = per_grid[0][idx];
        let fine = per_grid[1][idx];
        let variation = (fine - coarse).abs() / coarse.max(1e-300);
        let ok = coarse.is_finite() && fine.is_finite() && variation < 0.10;
        passed &= ok;
        rows.push(json!({
            "pair": [a, b],
            "family": if a <= b { "decay" } else { "gain" },
            "coarse": dec(coarse),
            "fine": dec(fine),
            "relative_variation": dec(variation),
            "ok": ok,
        }));
    }
    Ok(CriterionJson {
        id: 10,
        name: "smoothing-operator constants finite and grid-stable".into(),
        passed,
        details: json!({ "grids": ["spacing 0.02", "spacing 0.01"], "cases": rows }),
    })
}

fn c11_iteration_model_problem() -> Result<CriterionJson> {
    let ladder: NormLadder<Real> = NormLadder::new(Grid::ball(1, 1.0, 0.02)?, 1, 3);
    let model = model_problem::<Real>("quadratic")?;
    let u0 = DVector::zeros(ladder.grid.len());
    let f = ladder.grid.sample(|x| 1e-3 * (1.3 * x[0]).cos());
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
        &ladder,
        &Smoother,
        &config,
    )?;
    let final_residual = *hist.residuals.last().unwrap();
    let converged =
        hist.status == IterationStatus::Converged && final_residual <= 1e-8;

    // Tame-estimate measurement for the model right-inverse family.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let samples: Vec<(DVector<Real>, DVector<Real>)> = (0..10)
        .map(|_| {
            let a = 0.05 * standard_normal(&mut rng);
            let b = 1.0 + 4.0 * uniform(&mut rng);
            let u = ladder.grid.sample(|x| a * (b * x[0]).sin());
            let c = standard_normal(&mut rng);
            let h = ladder.grid.sample(|x| c * (b * x[0]).cos());
            (u, h)
        })
        .collect();
    let c0 = tame_check(model.right_inverse.as_ref(), &samples, &u0, 0, 1, &ladder)?;
    let c1 = tame_check(model.right_inverse.as_ref(), &samples, &u0, 1, 1, &ladder)?;

    let passed = converged && c0.is_finite() && c1.is_finite();
    Ok(CriterionJson {
        id: 11,
        name: "iteration on the quadratic model problem with tame constants".into(),
        passed,
        details: json!({
            "iterations": hist.residuals.len() - 1,
            "residuals": dec_vec(&hist.residuals),
            "final_residual": dec(final_residual),
            "tolerance": "1e-8 within 8 iterations",
            "tame_c0": dec(c0),
            "tame_c1": dec(c1),
        }),
    })
}

fn uniform(rng: &mut ChaCha8Rng) -> Real {
    use rand::Rng;
    rng.random::<Real>()
}
