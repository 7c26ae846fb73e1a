//! Closed registry of named differentiable functions.
//!
//! Scenario files never carry code; every scalar ingredient (priors, carriers,
//! statistics, natural parameters, mean coefficients, scale summands) is one
//! of the forms below, instantiated by id and parameter vector. Each form
//! supplies its value and derivatives in closed form. A central-difference
//! fallback with step [`FD_STEP`] is provided for completeness and doubles as
//! the documented contract for any future form that lacks a closed derivative.

use crate::error::{Error, Result};

/// Step used by the central-difference fallback derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Central first difference with step [`FD_STEP`].
pub fn central_d1(f: impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    Ok((f(t + FD_STEP)? - f(t - FD_STEP)?) / (2.0 * FD_STEP))
}

/// Central second difference with step [`FD_STEP`].
pub fn central_d2(f: impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    Ok((f(t + FD_STEP)? - 2.0 * f(t)? + f(t - FD_STEP)?) / (FD_STEP * FD_STEP))
}

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// A named univariate function with closed-form first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionHandle {
    form: UnivariateForm,
}

#[derive(Debug, Clone, PartialEq)]
enum UnivariateForm {
    Identity,
    Constant(f64),
    Linear { slope: f64, intercept: f64 },
    Polynomial(Vec<f64>),
    Exp { coeff: f64, rate: f64 },
    Log,
    GaussianPdf { loc: f64, scale: f64 },
    CauchyPdf { loc: f64, scale: f64 },
}

fn expect_params(form: &'static str, expected: &'static str, n: usize, params: &[f64]) -> Result<()> {
    if params.len() != n {
        return Err(Error::ParamCount {
            form,
            expected,
            got: params.len(),
        });
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Invalid(format!(
            "form `{form}` was given a non-finite parameter"
        )));
    }
    Ok(())
}

impl FunctionHandle {
    /// Instantiate a form by registry id. Parameter counts are enforced:
    ///
    /// | id                  | params                     | f(t)                      |
    /// |---------------------|----------------------------|---------------------------|
    /// | `identity`          | (none)                     | t                         |
    /// | `constant`          | c                          | c                         |
    /// | `linear`            | slope, intercept           | slope·t + intercept       |
    /// | `polynomial`        | c0, c1, …, cn (n ≥ 0)      | Σ ci·t^i                  |
    /// | `exp`               | coeff, rate                | coeff·e^(rate·t)          |
    /// | `log`               | (none)                     | ln t, t > 0               |
    /// | `gaussian_location` | loc, scale > 0             | normal pdf at t           |
    /// | `cauchy_location`   | loc, scale > 0             | Cauchy pdf at t           |
    pub fn new(id: &str, params: &[f64]) -> Result<Self> {
        let form = match id {
            "identity" => {
                expect_params("identity", "0", 0, params)?;
                UnivariateForm::Identity
            }
            "constant" => {
                expect_params("constant", "1", 1, params)?;
                UnivariateForm::Constant(params[0])
            }
            "linear" => {
                expect_params("linear", "2 (slope, intercept)", 2, params)?;
                UnivariateForm::Linear {
                    slope: params[0],
                    intercept: params[1],
                }
            }
            "polynomial" => {
                if params.is_empty() {
                    return Err(Error::ParamCount {
                        form: "polynomial",
                        expected: "at least 1 coefficient",
                        got: 0,
                    });
                }
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Invalid(
                        "form `polynomial` was given a non-finite coefficient".into(),
                    ));
                }
                UnivariateForm::Polynomial(params.to_vec())
            }
            "exp" => {
                expect_params("exp", "2 (coeff, rate)", 2, params)?;
                UnivariateForm::Exp {
                    coeff: params[0],
                    rate: params[1],
                }
            }
            "log" => {
                expect_params("log", "0", 0, params)?;
                UnivariateForm::Log
            }
            "gaussian_location" => {
                expect_params("gaussian_location", "2 (loc, scale)", 2, params)?;
                if params[1] <= 0.0 {
                    return Err(Error::Invalid(format!(
                        "gaussian_location scale must be positive, got {}",
                        params[1]
                    )));
                }
                UnivariateForm::GaussianPdf {
                    loc: params[0],
                    scale: params[1],
                }
            }
            "cauchy_location" => {
                expect_params("cauchy_location", "2 (loc, scale)", 2, params)?;
                if params[1] <= 0.0 {
                    return Err(Error::Invalid(format!(
                        "cauchy_location scale must be positive, got {}",
                        params[1]
                    )));
                }
                UnivariateForm::CauchyPdf {
                    loc: params[0],
                    scale: params[1],
                }
            }
            other => return Err(Error::UnknownForm(other.to_string())),
        };
        Ok(FunctionHandle { form })
    }

    /// Registry id of the instantiated form.
    pub fn form_id(&self) -> &'static str {
        match self.form {
            UnivariateForm::Identity => "identity",
            UnivariateForm::Constant(_) => "constant",
            UnivariateForm::Linear { .. } => "linear",
            UnivariateForm::Polynomial(_) => "polynomial",
            UnivariateForm::Exp { .. } => "exp",
            UnivariateForm::Log => "log",
            UnivariateForm::GaussianPdf { .. } => "gaussian_location",
            UnivariateForm::CauchyPdf { .. } => "cauchy_location",
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        let v = match &self.form {
            UnivariateForm::Identity => t,
            UnivariateForm::Constant(c) => *c,
            UnivariateForm::Linear { slope, intercept } => slope * t + intercept,
            UnivariateForm::Polynomial(c) => horner(c, t),
            UnivariateForm::Exp { coeff, rate } => coeff * (rate * t).exp(),
            UnivariateForm::Log => {
                if t <= 0.0 {
                    return Err(Error::Evaluation(format!(
                        "log form is undefined at t = {t} (domain t > 0)"
                    )));
                }
                t.ln()
            }
            UnivariateForm::GaussianPdf { loc, scale } => {
                let z = (t - loc) / scale;
                (-(0.5 * z * z) - LN_SQRT_TWO_PI).exp() / scale
            }
            UnivariateForm::CauchyPdf { loc, scale } => {
                let u = (t - loc) / scale;
                1.0 / (std::f64::consts::PI * scale * (1.0 + u * u))
            }
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "form `{}` is non-finite at t = {t}",
                self.form_id()
            )));
        }
        Ok(v)
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        let v = match &self.form {
            UnivariateForm::Identity => 1.0,
            UnivariateForm::Constant(_) => 0.0,
            UnivariateForm::Linear { slope, .. } => *slope,
            UnivariateForm::Polynomial(c) => horner_d1(c, t),
            UnivariateForm::Exp { rate, .. } => rate * self.value(t)?,
            UnivariateForm::Log => {
                self.value(t)?; // domain check
                1.0 / t
            }
            UnivariateForm::GaussianPdf { loc, scale } => {
                let z = (t - loc) / scale;
                -z / scale * self.value(t)?
            }
            UnivariateForm::CauchyPdf { loc, scale } => {
                let u = (t - loc) / scale;
                -2.0 * u / (scale * (1.0 + u * u)) * self.value(t)?
            }
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "derivative of form `{}` is non-finite at t = {t}",
                self.form_id()
            )));
        }
        Ok(v)
    }

    pub fn d2(&self, t: f64) -> Result<f64> {
        let v = match &self.form {
            UnivariateForm::Identity | UnivariateForm::Constant(_) | UnivariateForm::Linear { .. } => 0.0,
            UnivariateForm::Polynomial(c) => horner_d2(c, t),
            UnivariateForm::Exp { rate, .. } => rate * rate * self.value(t)?,
            UnivariateForm::Log => {
                self.value(t)?;
                -1.0 / (t * t)
            }
            UnivariateForm::GaussianPdf { loc, scale } => {
                let z = (t - loc) / scale;
                (z * z - 1.0) / (scale * scale) * self.value(t)?
            }
            UnivariateForm::CauchyPdf { loc, scale } => {
                let u = (t - loc) / scale;
                let one_plus = 1.0 + u * u;
                2.0 * (3.0 * u * u - 1.0) / (scale * scale * one_plus * one_plus) * self.value(t)?
            }
        };
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "second derivative of form `{}` is non-finite at t = {t}",
                self.form_id()
            )));
        }
        Ok(v)
    }

    /// ln f(t), computed without round-tripping through `exp` for the pdf and
    /// exponential forms so deep tails stay finite. Returns `-inf` when the
    /// value underflows to an exact zero.
    pub fn log_value(&self, t: f64) -> Result<f64> {
        match &self.form {
            UnivariateForm::GaussianPdf { loc, scale } => {
                let z = (t - loc) / scale;
                Ok(-0.5 * z * z - LN_SQRT_TWO_PI - scale.ln())
            }
            UnivariateForm::CauchyPdf { loc, scale } => {
                let u = (t - loc) / scale;
                Ok(-(std::f64::consts::PI * scale).ln() - u.mul_add(u, 1.0).ln())
            }
            UnivariateForm::Exp { coeff, rate } => {
                if *coeff <= 0.0 {
                    return Err(Error::Evaluation(format!(
                        "log of exp form with non-positive coefficient {coeff}"
                    )));
                }
                Ok(coeff.ln() + rate * t)
            }
            _ => {
                let v = self.value(t)?;
                if v < 0.0 {
                    return Err(Error::Evaluation(format!(
                        "log of negative value {v} from form `{}` at t = {t}",
                        self.form_id()
                    )));
                }
                Ok(v.ln())
            }
        }
    }

    /// d/dt ln f(t). Closed form where the quotient simplifies, otherwise
    /// d1/value.
    pub fn log_derivative(&self, t: f64) -> Result<f64> {
        match &self.form {
            UnivariateForm::GaussianPdf { loc, scale } => {
                let z = (t - loc) / scale;
                Ok(-z / scale)
            }
            UnivariateForm::CauchyPdf { loc, scale } => {
                let u = (t - loc) / scale;
                Ok(-2.0 * u / (scale * (1.0 + u * u)))
            }
            UnivariateForm::Exp { rate, .. } => Ok(*rate),
            _ => {
                let v = self.value(t)?;
                if v == 0.0 {
                    return Err(Error::Evaluation(format!(
                        "log-derivative of form `{}` undefined at zero value, t = {t}",
                        self.form_id()
                    )));
                }
                Ok(self.d1(t)? / v)
            }
        }
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn horner_d1(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * t + (i as f64) * c)
}

fn horner_d2(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * t + (i * (i - 1)) as f64 * c)
}

/// A named bivariate function f(u, v) with the partials needed by scale and
/// custom-density callers: f_u, f_v and the mixed second partial f_uv.
///
/// The single form `poly2` is a polynomial of total degree up to three; the
/// parameter vector is the coefficient triangle in graded order:
///
/// * 3 params: `c00, c10, c01` (affine)
/// * 6 params: `… c20, c11, c02` (quadratic)
/// * 10 params: `… c30, c21, c12, c03` (cubic)
///
/// where `cij` multiplies `u^i v^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Function2Handle {
    c: [f64; 10],
}

impl Function2Handle {
    pub fn new(id: &str, params: &[f64]) -> Result<Self> {
        if id != "poly2" {
            return Err(Error::UnknownForm(id.to_string()));
        }
        if !matches!(params.len(), 3 | 6 | 10) {
            return Err(Error::ParamCount {
                form: "poly2",
                expected: "3, 6 or 10 coefficients",
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid(
                "form `poly2` was given a non-finite coefficient".into(),
            ));
        }
        let mut c = [0.0; 10];
        c[..params.len()].copy_from_slice(params);
        Ok(Function2Handle { c })
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        let [c00, c10, c01, c20, c11, c02, c30, c21, c12, c03] = self.c;
        c00 + c10 * u
            + c01 * v
            + c20 * u * u
            + c11 * u * v
            + c02 * v * v
            + c30 * u * u * u
            + c21 * u * u * v
            + c12 * u * v * v
            + c03 * v * v * v
    }

    pub fn du(&self, u: f64, v: f64) -> f64 {
        let [_, c10, _, c20, c11, _, c30, c21, c12, _] = self.c;
        c10 + 2.0 * c20 * u + c11 * v + 3.0 * c30 * u * u + 2.0 * c21 * u * v + c12 * v * v
    }

    pub fn dv(&self, u: f64, v: f64) -> f64 {
        let [_, _, c01, _, c11, c02, _, c21, c12, c03] = self.c;
        c01 + c11 * u + 2.0 * c02 * v + c21 * u * u + 2.0 * c12 * u * v + 3.0 * c03 * v * v
    }

    pub fn dudv(&self, u: f64, v: f64) -> f64 {
        let [_, _, _, _, c11, _, _, c21, c12, _] = self.c;
        c11 + 2.0 * c21 * u + 2.0 * c12 * v
    }
}

/// A named trivariate function m(t, x, y) with the partials in x and y.
///
/// The single form `trilinear` is multi-affine with 8 coefficients
/// `c0, ct, cx, cy, ctx, cty, cxy, ctxy`:
/// `m = c0 + ct·t + cx·x + cy·y + ctx·t·x + cty·t·y + cxy·x·y + ctxy·t·x·y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Function3Handle {
    c: [f64; 8],
}

impl Function3Handle {
    pub fn new(id: &str, params: &[f64]) -> Result<Self> {
        if id != "trilinear" {
            return Err(Error::UnknownForm(id.to_string()));
        }
        if params.len() != 8 {
            return Err(Error::ParamCount {
                form: "trilinear",
                expected: "8 coefficients",
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid(
                "form `trilinear` was given a non-finite coefficient".into(),
            ));
        }
        let mut c = [0.0; 8];
        c.copy_from_slice(params);
        Ok(Function3Handle { c })
    }

    pub fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        let [c0, ct, cx, cy, ctx, cty, cxy, ctxy] = self.c;
        c0 + ct * t + cx * x + cy * y + ctx * t * x + cty * t * y + cxy * x * y + ctxy * t * x * y
    }

    pub fn dx(&self, t: f64, _x: f64, y: f64) -> f64 {
        let [_, _, cx, _, ctx, _, cxy, ctxy] = self.c;
        cx + ctx * t + cxy * y + ctxy * t * y
    }

    pub fn dy(&self, t: f64, x: f64, _y: f64) -> f64 {
        let [_, _, _, cy, _, cty, cxy, ctxy] = self.c;
        cy + cty * t + cxy * x + ctxy * t * x
    }
}
