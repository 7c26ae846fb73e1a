//! Scenario documents: the JSON schema the command line accepts, strict
//! parsing with path-qualified errors, and conversion into model values.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use riskscale::{
    CriteriaBox, DensityFamily, Function2Handle, Function3Handle, FunctionHandle, Interval,
    LocationFamily, LogNormalizer, MeanFunction, ScaleFunction, Scenario, ThetaPrior,
};

/// A one-argument function: named form plus coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub form: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionSpec {
    fn build(&self, path: &str) -> Result<FunctionHandle> {
        FunctionHandle::new(&self.form, &self.params).with_context(|| format!("{path}: rejected"))
    }
}

/// A two-argument function given by graded polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Function2Spec {
    pub form: String,
    pub coeffs: Vec<f64>,
}

impl Function2Spec {
    fn build(&self, path: &str) -> Result<Function2Handle> {
        Function2Handle::new(&self.form, &self.coeffs).with_context(|| format!("{path}: rejected"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub form: String,
    #[serde(default)]
    pub params: Vec<f64>,
    pub support: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// "named_location", "exponential_family", or "custom".
    pub kind: String,
    /// named_location: "gaussian" or "cauchy".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// named_location: positive scale parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// exponential_family: positive carrier density r.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<FunctionSpec>,
    /// exponential_family: sufficient statistic a.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<FunctionSpec>,
    /// exponential_family: natural parameter map c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natural_param: Option<FunctionSpec>,
    /// exponential_family: closed log-normalizer; omit to integrate it
    /// numerically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_normalizer: Option<FunctionSpec>,
    /// custom: log density as a function of (criterion, parameter).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_density: Option<Function2Spec>,
    pub support: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanSpec {
    /// "affine_in_scale" or "custom".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FunctionSpec>,
    /// custom: eight trilinear coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    /// "semilinear", "product", or "custom".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FunctionSpec>,
    /// custom: graded polynomial coefficients in (x, y).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x_support: [f64; 2],
    pub y_support: [f64; 2],
}

/// The on-disk scenario format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub prior: PriorSpec,
    pub family_x: FamilySpec,
    pub family_y: FamilySpec,
    pub mean: MeanSpec,
    pub scale: ScaleSpec,
    #[serde(rename = "box")]
    pub bounds: BoxSpec,
}

fn interval(pair: [f64; 2], path: &str) -> Result<Interval> {
    Interval::new(pair[0], pair[1]).with_context(|| format!("{path}: rejected"))
}

/// Error when a key irrelevant to the declared kind is present.
fn forbid(path: &str, kind: &str, extras: &[(&str, bool)]) -> Result<()> {
    for (name, present) in extras {
        if *present {
            bail!("{path}.{name}: not a key of kind `{kind}`");
        }
    }
    Ok(())
}

fn require<'a, T>(field: &'a Option<T>, path: &str, name: &str, kind: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| anyhow!("{path}.{name}: required for kind `{kind}`"))
}

impl FamilySpec {
    fn build(&self, path: &str) -> Result<DensityFamily> {
        let support = interval(self.support, &format!("{path}.support"))?;
        match self.kind.as_str() {
            "named_location" => {
                forbid(
                    path,
                    "named_location",
                    &[
                        ("carrier", self.carrier.is_some()),
                        ("statistic", self.statistic.is_some()),
                        ("natural_param", self.natural_param.is_some()),
                        ("log_normalizer", self.log_normalizer.is_some()),
                        ("log_density", self.log_density.is_some()),
                    ],
                )?;
                let family = match require(&self.family, path, "family", "named_location")?.as_str()
                {
                    "gaussian" => LocationFamily::Gaussian,
                    "cauchy" => LocationFamily::Cauchy,
                    other => bail!("{path}.family: unknown family `{other}`, expected `gaussian` or `cauchy`"),
                };
                let scale = *require(&self.scale, path, "scale", "named_location")?;
                DensityFamily::named_location(family, scale, support)
                    .with_context(|| format!("{path}: rejected"))
            }
            "exponential_family" => {
                forbid(
                    path,
                    "exponential_family",
                    &[
                        ("family", self.family.is_some()),
                        ("scale", self.scale.is_some()),
                        ("log_density", self.log_density.is_some()),
                    ],
                )?;
                let carrier = require(&self.carrier, path, "carrier", "exponential_family")?
                    .build(&format!("{path}.carrier"))?;
                let statistic = require(&self.statistic, path, "statistic", "exponential_family")?
                    .build(&format!("{path}.statistic"))?;
                let natural =
                    require(&self.natural_param, path, "natural_param", "exponential_family")?
                        .build(&format!("{path}.natural_param"))?;
                let log_normalizer = match &self.log_normalizer {
                    Some(spec) => {
                        LogNormalizer::Closed(spec.build(&format!("{path}.log_normalizer"))?)
                    }
                    None => LogNormalizer::numeric(),
                };
                DensityFamily::exponential_family(carrier, statistic, natural, log_normalizer, support)
                    .with_context(|| format!("{path}: rejected"))
            }
            "custom" => {
                forbid(
                    path,
                    "custom",
                    &[
                        ("family", self.family.is_some()),
                        ("scale", self.scale.is_some()),
                        ("carrier", self.carrier.is_some()),
                        ("statistic", self.statistic.is_some()),
                        ("natural_param", self.natural_param.is_some()),
                        ("log_normalizer", self.log_normalizer.is_some()),
                    ],
                )?;
                let log_density = require(&self.log_density, path, "log_density", "custom")?
                    .build(&format!("{path}.log_density"))?;
                Ok(DensityFamily::custom(log_density, support))
            }
            other => bail!("{path}.kind: unknown kind `{other}`"),
        }
    }
}

impl MeanSpec {
    fn build(&self, path: &str) -> Result<MeanFunction> {
        match self.kind.as_str() {
            "affine_in_scale" => {
                forbid(path, "affine_in_scale", &[("coeffs", self.coeffs.is_some())])?;
                Ok(MeanFunction::AffineInScale {
                    c1: require(&self.c1, path, "c1", "affine_in_scale")?
                        .build(&format!("{path}.c1"))?,
                    c2: require(&self.c2, path, "c2", "affine_in_scale")?
                        .build(&format!("{path}.c2"))?,
                    a: require(&self.a, path, "a", "affine_in_scale")?
                        .build(&format!("{path}.a"))?,
                    b: require(&self.b, path, "b", "affine_in_scale")?
                        .build(&format!("{path}.b"))?,
                })
            }
            "custom" => {
                forbid(
                    path,
                    "custom",
                    &[
                        ("c1", self.c1.is_some()),
                        ("c2", self.c2.is_some()),
                        ("a", self.a.is_some()),
                        ("b", self.b.is_some()),
                    ],
                )?;
                let coeffs = require(&self.coeffs, path, "coeffs", "custom")?;
                let handle = Function3Handle::new("trilinear", coeffs)
                    .with_context(|| format!("{path}.coeffs: rejected"))?;
                Ok(MeanFunction::Custom(handle))
            }
            other => bail!("{path}.kind: unknown kind `{other}`"),
        }
    }
}

impl ScaleSpec {
    fn build(&self, path: &str) -> Result<ScaleFunction> {
        match self.kind.as_str() {
            "semilinear" => {
                forbid(path, "semilinear", &[("coeffs", self.coeffs.is_some())])?;
                Ok(ScaleFunction::Semilinear {
                    a: require(&self.a, path, "a", "semilinear")?.build(&format!("{path}.a"))?,
                    b: require(&self.b, path, "b", "semilinear")?.build(&format!("{path}.b"))?,
                })
            }
            "product" => {
                forbid(
                    path,
                    "product",
                    &[
                        ("a", self.a.is_some()),
                        ("b", self.b.is_some()),
                        ("coeffs", self.coeffs.is_some()),
                    ],
                )?;
                Ok(ScaleFunction::Product)
            }
            "custom" => {
                forbid(path, "custom", &[("a", self.a.is_some()), ("b", self.b.is_some())])?;
                let coeffs = require(&self.coeffs, path, "coeffs", "custom")?;
                let handle = Function2Handle::new("poly2", coeffs)
                    .with_context(|| format!("{path}.coeffs: rejected"))?;
                Ok(ScaleFunction::Custom(handle))
            }
            other => bail!("{path}.kind: unknown kind `{other}`"),
        }
    }
}

impl ScenarioDocument {
    /// Convert the document into a validated scenario.
    pub fn build(&self) -> Result<Scenario> {
        let prior_density = FunctionSpec {
            form: self.prior.form.clone(),
            params: self.prior.params.clone(),
        }
        .build("prior")?;
        let prior = ThetaPrior::new(prior_density, interval(self.prior.support, "prior.support")?)
            .context("prior: rejected")?;
        let family_x = self.family_x.build("family_x")?;
        let family_y = self.family_y.build("family_y")?;
        let mean = self.mean.build("mean")?;
        let scale = self.scale.build("scale")?;
        let bounds = CriteriaBox {
            x: interval(self.bounds.x_support, "box.x_support")?,
            y: interval(self.bounds.y_support, "box.y_support")?,
        };
        Scenario::new(prior, family_x, family_y, mean, scale, bounds).context("scenario rejected")
    }
}

/// Read and strictly parse a scenario document; unknown keys are reported
/// with their JSON path.
pub fn load_document(path: &Path) -> Result<ScenarioDocument> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("failed to read scenario file `{}`", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let doc: ScenarioDocument = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| anyhow!("`{}` at {}: {}", path.display(), e.path(), e.inner()))?;
    Ok(doc)
}

/// Load a scenario file end to end.
pub fn load_scenario(path: &Path) -> Result<(ScenarioDocument, Scenario)> {
    let doc = load_document(path)?;
    let scn = doc
        .build()
        .with_context(|| format!("`{}`", path.display()))?;
    Ok((doc, scn))
}
