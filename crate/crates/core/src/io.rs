//! JSON descriptions of systems and curvature inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureJet2D, CurvatureJet3D};
use crate::field::{LinearSystemField, MatrixField, VectorField};
use crate::pipeline::PipelineCurvature;
use crate::{Error, Real, Result};

/// Serializable system description: either a first-order polynomial jet or
/// the name of a built-in evaluator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub s: usize,
    /// `"jet"` or `"callable-id"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet: Option<JetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callable_id: Option<String>,
}

/// Jet coefficients: `a0[i]` and `a_lin[i][j]` are `s×s` row-major matrices
/// with `A^i(x) = a0[i] + Σ_j x^j a_lin[i][j]`, similarly for `B`, and an
/// optional affine right-hand side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetSpec {
    pub a0: Vec<Vec<Vec<Real>>>,
    pub a_lin: Vec<Vec<Vec<Vec<Real>>>>,
    pub b0: Vec<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_lin: Option<Vec<Vec<Vec<Real>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_lin: Option<Vec<Vec<Real>>>,
}

fn to_matrix(rows: &[Vec<Real>], r: usize, c: usize, what: &'static str) -> Result<DMatrix<Real>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: rows.len(),
            context: what,
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl SystemSpec {
    pub fn build(&self) -> Result<LinearSystemField<Real>> {
        match self.kind.as_str() {
            "jet" => {
                let jet = self
                    .jet
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("kind \"jet\" without jet data".into()))?;
                let (n, s) = (self.n, self.s);
                if jet.a0.len() != n || jet.a_lin.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: jet.a0.len(),
                        context: "jet A coefficients",
                    });
                }
                let mut a = Vec::with_capacity(n);
                for i in 0..n {
                    let constant = to_matrix(&jet.a0[i], s, s, "A0 block")?;
                    let mut linear = Vec::with_capacity(n);
                    if jet.a_lin[i].len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: jet.a_lin[i].len(),
                            context: "A_lin directions",
                        });
                    }
                    for j in 0..n {
                        linear.push(to_matrix(&jet.a_lin[i][j], s, s, "A_lin block")?);
                    }
                    a.push(MatrixField::jet(constant, linear));
                }
                let b0 = to_matrix(&jet.b0, s, s, "B0")?;
                let b = match &jet.b_lin {
                    None => MatrixField::constant(b0),
                    Some(lin) => {
                        let mut linear = Vec::with_capacity(n);
                        for block in lin {
                            linear.push(to_matrix(block, s, s, "B_lin block")?);
                        }
                        MatrixField::jet(b0, linear)
                    }
                };
                let h0 = match &jet.h0 {
                    None => DVector::zeros(s),
                    Some(v) => DVector::from_row_slice(v),
                };
                let h = match &jet.h_lin {
                    None => VectorField::constant(h0),
                    Some(lin) => VectorField::Jet {
                        constant: h0,
                        linear: lin.iter().map(|v| DVector::from_row_slice(v)).collect(),
                        remainder: None,
                    },
                };
                LinearSystemField::new(n, s, a, b, h, true)
            }
            "callable-id" => {
                let id = self.callable_id.as_ref().ok_or_else(|| {
                    Error::InvalidInput("kind \"callable-id\" without callable_id".into())
                })?;
                builtin_system(id)
            }
            other => Err(Error::InvalidInput(format!("unknown system kind `{other}`"))),
        }
    }
}

/// Built-in evaluators addressable from JSON specs.
pub fn builtin_system(id: &str) -> Result<LinearSystemField<Real>> {
    match id {
        "singular-ode" => Ok(LinearSystemField::singular_ode(0.0, 2.0)),
        "singular-ode-shifted" => Ok(LinearSystemField::singular_ode(0.3, 2.0)),
        "manufactured-2d" => Ok(LinearSystemField::manufactured_2d(3.0)),
        other => Err(Error::InvalidInput(format!(
            "unknown callable id `{other}`"
        ))),
    }
}

/// Curvature input: either `(K, k1, k2)` or a symmetric 3×3 matrix together
/// with the 15 retained derivative components in the documented order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurvatureSpec {
    TwoD {
        #[serde(rename = "K")]
        k: Real,
        k1: Real,
        k2: Real,
    },
    ThreeD {
        #[serde(rename = "Rhat")]
        rhat: Vec<Vec<Real>>,
        #[serde(default)]
        r: Option<Vec<Real>>,
        #[serde(default)]
        sigma: Option<Real>,
    },
}

impl CurvatureSpec {
    pub fn build(&self) -> Result<PipelineCurvature<Real>> {
        match self {
            CurvatureSpec::TwoD { k, k1, k2 } => Ok(PipelineCurvature::TwoD(CurvatureJet2D {
                k: *k,
                k1: *k1,
                k2: *k2,
            })),
            CurvatureSpec::ThreeD { rhat, r, sigma } => {
                let m = to_matrix(rhat, 3, 3, "Rhat")?;
                let mut r15 = [0.0; 15];
                if let Some(values) = r {
                    if values.len() != 15 {
                        return Err(Error::DimensionMismatch {
                            expected: 15,
                            got: values.len(),
                            context: "curvature derivative components",
                        });
                    }
                    r15.copy_from_slice(values);
                }
                Ok(PipelineCurvature::ThreeD {
                    curv: CurvatureJet3D::new(m, r15)?,
                    sigma: *sigma,
                })
            }
        }
    }
}
