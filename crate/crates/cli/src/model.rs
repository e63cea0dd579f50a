//! Model files: `A(z)` as JSON with explicit shape fields.
//!
//! ```json
//! { "n": 2, "K": 1, "form": "var", "coeffs": [[[0.5, 0.5], [0.5, 0.5]]] }
//! ```
//!
//! In `var` form `coeffs` holds the lag matrices `Phi_1..Phi_K` of
//! `A(z) = I - sum Phi_k z^k`; in `general` form it holds `A_0..A_K`.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use unitroot::{Mat, MatrixPolynomial, Tolerances};

use crate::error::CliError;
use crate::real::rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    General,
    Var,
}

/// Tolerance overrides; missing fields keep their defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonsing_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_abs: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Result<Tolerances, CliError> {
        Ok(Tolerances::new(
            self.rank_rel.unwrap_or(base.rank_rel),
            self.nonsing_rel.unwrap_or(base.nonsing_rel),
            self.residual_abs.unwrap_or(base.residual_abs),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub form: Form,
    #[serde(serialize_with = "ser_coeffs")]
    pub coeffs: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

fn ser_coeffs<S: Serializer>(c: &[Vec<Vec<f64>>], s: S) -> Result<S::Ok, S::Error> {
    let out: Vec<_> = c
        .iter()
        .map(|m| {
            m.iter()
                .map(|r| r.iter().copied().map(crate::real::Real).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        })
        .collect();
    out.serialize(s)
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` prefixes error messages.
    pub fn parse(text: &str, origin: &str) -> Result<ModelFile, CliError> {
        let model: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_string(),
            msg: e.to_string(),
        })?;
        model.validate().map_err(|msg| CliError::Parse {
            path: origin.to_string(),
            msg,
        })?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be positive".into());
        }
        let expected = match self.form {
            Form::General => self.k + 1,
            Form::Var => self.k,
        };
        if self.form == Form::Var && self.k == 0 {
            return Err("var form needs K >= 1".into());
        }
        if self.coeffs.len() != expected {
            return Err(format!(
                "coeffs: expected {expected} matrices for K = {} in {} form, found {}",
                self.k,
                self.form_name(),
                self.coeffs.len()
            ));
        }
        for (c, mat) in self.coeffs.iter().enumerate() {
            if mat.len() != self.n {
                return Err(format!(
                    "coeffs[{c}]: expected {} rows, found {}",
                    self.n,
                    mat.len()
                ));
            }
            for (i, row) in mat.iter().enumerate() {
                if row.len() != self.n {
                    return Err(format!(
                        "coeffs[{c}][{i}]: expected {} entries, found {}",
                        self.n,
                        row.len()
                    ));
                }
                if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                    return Err(format!("coeffs[{c}][{i}][{j}]: not finite"));
                }
            }
        }
        Ok(())
    }

    pub fn form_name(&self) -> &'static str {
        match self.form {
            Form::General => "general",
            Form::Var => "var",
        }
    }

    fn matrices(&self) -> Vec<Mat> {
        self.coeffs
            .iter()
            .map(|m| Mat::from_fn(self.n, self.n, |i, j| m[i][j]))
            .collect()
    }

    pub fn polynomial(&self) -> Result<MatrixPolynomial, CliError> {
        let mats = self.matrices();
        Ok(match self.form {
            Form::General => MatrixPolynomial::new(mats)?,
            Form::Var => MatrixPolynomial::from_var(&mats)?,
        })
    }

    /// VAR form when `A_0 = I`, general form otherwise.
    pub fn from_polynomial(p: &MatrixPolynomial) -> ModelFile {
        let to_rows = |m: &Mat| -> Vec<Vec<f64>> {
            rows(m)
                .into_iter()
                .map(|r| r.into_iter().map(|x| x.0).collect())
                .collect()
        };
        let (form, coeffs) = match p.var_lags() {
            Ok(lags) if p.is_var_form() && !lags.is_empty() => {
                (Form::Var, lags.iter().map(to_rows).collect())
            }
            _ => (Form::General, p.coeffs().iter().map(to_rows).collect()),
        };
        ModelFile {
            n: p.dim(),
            k: p.degree(),
            form,
            coeffs,
            tolerances: None,
        }
    }
}
