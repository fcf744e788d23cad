//! Run configuration: a flat JSON object whose keys double as command-line
//! flags. Flags take precedence over the file.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use curvstep_core::models::{BounceParams, DollyExcitation, DollyParams};
use curvstep_core::stepcontrol::{
    CurvatureControllerConfig, DtBounds, LocalErrorConfig, DEFAULT_SAFETY, DEFAULT_TOL_HIGH,
    DEFAULT_TOL_LOW,
};
use curvstep_core::IntegratorKind;

use crate::harness::{ControllerSpec, Problem, RunSpec, DEFAULT_CHUNG_LEE_BETA, DEFAULT_RHO_B};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    Dolly,
    Bounce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    #[default]
    Cdm,
    EgAlpha,
    ChungLee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerName {
    Fixed,
    #[default]
    Curvature,
    ApparentFrequency,
    LocalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExcitationName {
    #[default]
    Wheel1,
    AllWheels,
}

/// Every field is a flat key; unset ones fall back to the problem defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemName,
    #[serde(default)]
    pub integrator: IntegratorName,
    #[serde(default)]
    pub controller: ControllerName,
    pub t_end: Option<f64>,
    /// Step of the fixed controller.
    pub dt: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub b: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
    pub rejection: Option<bool>,
    pub safety: Option<f64>,
    pub tol_low: Option<f64>,
    pub tol_high: Option<f64>,
    pub rho_b: Option<f64>,
    pub beta: Option<f64>,
    pub decimation: Option<usize>,
    pub excitation: Option<ExcitationName>,
    /// Also measure the error against the problem's reference solution.
    pub reference: Option<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("missing required field `{field}` for the {context}")]
    Missing { field: &'static str, context: &'static str },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] curvstep_core::Error),
    #[error("configuration must be a JSON object")]
    NotAnObject,
}

/// Overlays `overrides` on the object parsed from `file` and deserializes.
pub fn merge(file: Option<&str>, overrides: Map<String, Value>) -> Result<(RunConfig, Map<String, Value>), ConfigError> {
    let mut map = match file {
        Some(text) => match serde_json::from_str::<Value>(text)? {
            Value::Object(m) => m,
            _ => return Err(ConfigError::NotAnObject),
        },
        None => Map::new(),
    };
    map.extend(overrides);
    let cfg = serde_json::from_value(Value::Object(map.clone()))?;
    Ok((cfg, map))
}

impl RunConfig {
    pub fn problem(&self) -> Problem {
        match self.problem {
            ProblemName::Dolly => Problem::Dolly(DollyParams {
                excitation: match self.excitation.unwrap_or_default() {
                    ExcitationName::Wheel1 => DollyExcitation::Wheel1,
                    ExcitationName::AllWheels => DollyExcitation::AllWheels,
                },
                ..DollyParams::default()
            }),
            ProblemName::Bounce => Problem::Bounce(BounceParams::default()),
        }
    }

    fn integrator(&self) -> IntegratorKind {
        match self.integrator {
            IntegratorName::Cdm => IntegratorKind::Cdm,
            IntegratorName::EgAlpha => IntegratorKind::EgAlpha { rho_b: self.rho_b.unwrap_or(DEFAULT_RHO_B) },
            IntegratorName::ChungLee => {
                IntegratorKind::ChungLee { beta: self.beta.unwrap_or(DEFAULT_CHUNG_LEE_BETA) }
            }
        }
    }

    fn controller(&self, problem: &Problem) -> Result<ControllerSpec, ConfigError> {
        let defaults = problem.bounds()?;
        let bounds = DtBounds::new(self.dt_min.unwrap_or(defaults.min), self.dt_max.unwrap_or(defaults.max))?;
        Ok(match self.controller {
            ControllerName::Fixed => ControllerSpec::Fixed {
                dt: self.dt.ok_or(ConfigError::Missing { field: "dt", context: "fixed controller" })?,
            },
            ControllerName::Curvature => {
                let (b, zeta) = problem.curvature_params();
                let mut cfg = CurvatureControllerConfig::new(
                    self.b.unwrap_or(b),
                    bounds.min,
                    bounds.max,
                    self.zeta.unwrap_or(zeta),
                )?
                .with_rejection(self.rejection.unwrap_or(true));
                if let Some(alpha) = self.alpha {
                    cfg = cfg.with_alpha(alpha)?;
                }
                ControllerSpec::Curvature(cfg)
            }
            ControllerName::ApparentFrequency => {
                ControllerSpec::ApparentFrequency { bounds, safety: self.safety.unwrap_or(DEFAULT_SAFETY) }
            }
            ControllerName::LocalError => ControllerSpec::LocalError(LocalErrorConfig::new(
                bounds,
                self.tol_low.unwrap_or(DEFAULT_TOL_LOW),
                self.tol_high.unwrap_or(DEFAULT_TOL_HIGH),
            )?),
        })
    }

    pub fn to_spec(&self) -> Result<RunSpec, ConfigError> {
        let problem = self.problem();
        let integrator = self.integrator();
        integrator.validate()?;
        let controller = self.controller(&problem)?;
        controller.build()?;
        let mut spec = RunSpec::new(format!("{}-{}", problem.name(), controller.label()), problem, controller)?
            .with_integrator(integrator);
        if let Some(t_end) = self.t_end {
            spec.t_end = t_end;
        }
        if let Some(k) = self.decimation {
            spec.decimation = k.max(1);
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_file() {
        let file = r#"{"problem": "bounce", "controller": "curvature", "b": 0.1}"#;
        let (cfg, echo) = merge(Some(file), obj(json!({"b": 0.444}))).unwrap();
        assert_eq!(cfg.b, Some(0.444));
        assert_eq!(echo["b"], json!(0.444));
        let ControllerSpec::Curvature(c) = cfg.to_spec().unwrap().controller else { panic!() };
        assert_eq!((c.b, c.zeta, c.dt_max), (0.444, 10.0, 0.85 * 2e-5));
    }

    #[test]
    fn dolly_defaults() {
        let (cfg, _) = merge(None, obj(json!({"problem": "dolly"}))).unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.t_end, 0.25);
        let ControllerSpec::Curvature(c) = spec.controller else { panic!() };
        assert_eq!((c.b, c.zeta, c.dt_min, c.dt_max), (0.005, 1.0, 2.9412e-5, 2.5e-3));
    }

    #[test]
    fn fixed_needs_dt() {
        let (cfg, _) = merge(None, obj(json!({"problem": "dolly", "controller": "fixed"}))).unwrap();
        let err = cfg.to_spec().unwrap_err().to_string();
        assert!(err.contains("`dt`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = merge(None, obj(json!({"problem": "dolly", "bogus": 1}))).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn integrator_parameters() {
        let (cfg, _) = merge(None, obj(json!({"problem": "bounce", "integrator": "eg-alpha", "rho-b": 0.5}))).unwrap();
        assert_eq!(cfg.to_spec().unwrap().integrator, IntegratorKind::EgAlpha { rho_b: 0.5 });
        let (cfg, _) = merge(None, obj(json!({"problem": "bounce", "integrator": "chung-lee", "beta": 2.0}))).unwrap();
        assert!(cfg.to_spec().is_err());
    }
}
