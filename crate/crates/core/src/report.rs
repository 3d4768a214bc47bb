//! JSON report types.  Every numeric field is serialized as a decimal
//! string (shortest round-trip form), so reports diff cleanly and
//! reproduce bit for bit.

use serde::Serialize;

use crate::embedding::ConstraintReport;
use crate::positivity::PositivityReport;
use crate::Real;

/// Shortest decimal string that round-trips the value.
pub fn dec(v: Real) -> String {
    format!("{v}")
}

pub fn dec_vec(vs: &[Real]) -> Vec<String> {
    vs.iter().map(|v| dec(*v)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityJson {
    pub symmetric: bool,
    pub lambda0_min: String,
    pub lambda1_min: String,
    pub lh_min: String,
    pub points_checked: usize,
    pub ssp: bool,
}

impl PositivityJson {
    pub fn from_report(rep: &PositivityReport<Real>, tol: Real) -> Self {
        PositivityJson {
            symmetric: rep.symmetric,
            lambda0_min: dec(rep.lambda0_min),
            lambda1_min: dec(rep.lambda1_min),
            lh_min: dec(rep.lh_min),
            points_checked: rep.points_checked,
            ssp: rep.is_ssp(tol),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstraintsJson {
    pub gauss: String,
    pub codazzi: String,
    pub annihilator: String,
    pub derivative_gauss: String,
    pub derivative_annihilator: String,
    pub max: String,
}

impl ConstraintsJson {
    pub fn from_report(rep: &ConstraintReport<Real>) -> Self {
        ConstraintsJson {
            gauss: dec(rep.gauss),
            codazzi: dec(rep.codazzi),
            annihilator: dec(rep.annihilator),
            derivative_gauss: dec(rep.d_gauss),
            derivative_annihilator: dec(rep.d_annihilator),
            max: dec(rep.max()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OdeDemoJson {
    pub pconvex: bool,
    pub solution_space_dim: usize,
    pub residual: String,
    pub smallest_singular_values: Vec<String>,
    pub max_error_vs_closed_form: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendJson {
    pub r: String,
    pub delta: String,
    pub m0: String,
    pub m1: String,
    pub lambda0: String,
    pub lambda1: String,
    pub lambda0_half: String,
    pub lambda1_half: String,
    pub measured_q0_min: String,
    pub measured_q1_min: String,
    pub p_convex_radius: Option<String>,
    pub boundary_min_eigenvalue: Option<String>,
    /// `(radius, measured minimum eigenvalue, growth bound)` per candidate.
    pub growth: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveLinearJson {
    pub nodes: usize,
    pub unknowns: usize,
    pub residual_l2: String,
    pub norms: Vec<String>,
    pub lambda0: String,
    pub l2_lhs: String,
    pub l2_rhs: String,
    pub boundary_flux: String,
    pub balance_residual: String,
    pub l2_holds: bool,
    pub hk: Vec<HkJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HkJson {
    pub k: usize,
    pub norm_v: String,
    pub norm_h: String,
    pub ratio: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NashMoserJson {
    pub model: String,
    pub status: String,
    pub iterations: usize,
    pub residuals: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankCheckJson {
    pub sigma: String,
    pub rank: usize,
    pub det_submatrix: String,
    pub closed_form: String,
    pub det_factored: String,
    pub rel_deviation_from_closed_form: String,
    pub rel_deviation_from_factored: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineJson {
    pub n: usize,
    pub sigma: Option<String>,
    pub lambda: String,
    pub mu: String,
    pub q0_deviation: String,
    pub q1_deviation: String,
    pub q0_deviation_fd: String,
    pub q1_deviation_fd: String,
    pub constraints: ConstraintsJson,
    pub positivity_radius: String,
    pub ssp: PositivityJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionJson {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceJson {
    pub criteria: Vec<CriterionJson>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_strings_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            let s = dec(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }
}
