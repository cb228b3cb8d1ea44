//! Flat TOML experiment configuration.
//!
//! Every key lives at the top level (no nested tables) so configs stay
//! greppable and CLI flags can override individual keys one-to-one. A config
//! is inert data: nothing runs until it passes [`ExperimentConfig::validate`],
//! which funnels through the geometry module's admissibility check so a
//! rejected scenario names the violated condition.

use serde::Deserialize;
use thiserror::Error;

use crate::caloric::CaloricField;
use crate::geometry::{validate_config, GeometryError, Margins, ScenarioGeometry};
use crate::space_time::{make_probe, ProbeDirection, SpaceTimePoint, SpatialVec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {reason}")]
    Invalid {
        field: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which limit formula a `reconstruct` run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Carleman,
    Enclosure,
}

/// Which caloric field supplies the synthetic measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Constant,
    Exponential,
    HeatKernel,
    /// run the Crank–Nicolson forward solver and measure its traces
    ForwardGrid,
}

fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_t_end() -> f64 {
    2.0
}
fn default_nx() -> usize {
    201
}
fn default_nt() -> usize {
    801
}
fn default_output() -> String {
    "sweep.csv".into()
}

/// The flat configuration. Field meanings by group:
/// geometry (`domain_*`, `t_end`, `gamma_*`, `u_*`, `target_*`), probe
/// (`probe_c`, `probe_omega`), data source (`field`, `field_*`, `solver_*`,
/// `robin_rho`, `noise_*`), method (`method`, `taus`, `cone_delta`), output
/// (`output`, `reference`).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub domain_lo: f64,
    #[serde(default = "default_one")]
    pub domain_hi: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub gamma_left: bool,
    #[serde(default = "default_true")]
    pub gamma_right: bool,
    #[serde(default)]
    pub u_lo: f64,
    #[serde(default = "default_one")]
    pub u_hi: f64,
    pub target_x: f64,
    pub target_t: f64,

    pub probe_c: f64,
    /// probe orientation, ±1
    #[serde(default = "default_one")]
    pub probe_omega: f64,

    pub field: FieldKind,
    /// constant field value
    #[serde(default = "default_one")]
    pub field_value: f64,
    /// exponential field coefficient a in e^{ax + a²t}
    #[serde(default = "default_one")]
    pub field_coeff: f64,
    /// heat-kernel source point (must have `field_t_s` < 0)
    #[serde(default)]
    pub field_x_s: f64,
    #[serde(default)]
    pub field_t_s: f64,

    #[serde(default = "default_nx")]
    pub solver_nx: usize,
    #[serde(default = "default_nt")]
    pub solver_nt: usize,

    pub method: Method,
    pub taus: Vec<f64>,
    /// cone depth; required for `method = "enclosure"`
    pub cone_delta: Option<f64>,

    #[serde(default)]
    pub robin_rho: f64,
    /// additive uniform noise amplitude on the measured traces (0 = exact)
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default = "default_one")]
    pub noise_seed: f64,

    #[serde(default = "default_output")]
    pub output: String,
    /// known value of u(target), if any, for error columns
    pub reference: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Parse a config from TOML text already in memory.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check_fields()?;
        Ok(cfg)
    }

    /// Field-level sanity (shape of the data, not admissibility).
    pub fn check_fields(&self) -> Result<(), ConfigError> {
        if self.taus.is_empty() || self.taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid {
                field: "taus",
                reason: "must be a non-empty strictly increasing list".into(),
            });
        }
        if !(self.probe_c > 0.0) {
            return Err(ConfigError::Invalid {
                field: "probe_c",
                reason: "must be positive".into(),
            });
        }
        if self.probe_omega != 1.0 && self.probe_omega != -1.0 {
            return Err(ConfigError::Invalid {
                field: "probe_omega",
                reason: "must be +1 or -1".into(),
            });
        }
        if self.method == Method::Enclosure && self.cone_delta.is_none() {
            return Err(ConfigError::Invalid {
                field: "cone_delta",
                reason: "required when method = \"enclosure\"".into(),
            });
        }
        if let Some(d) = self.cone_delta {
            if !(d > 0.0) {
                return Err(ConfigError::Invalid {
                    field: "cone_delta",
                    reason: "must be positive".into(),
                });
            }
        }
        if self.field == FieldKind::HeatKernel && !(self.field_t_s < 0.0) {
            return Err(ConfigError::Invalid {
                field: "field_t_s",
                reason: "heat-kernel source time must be negative".into(),
            });
        }
        if self.noise_amplitude < 0.0 {
            return Err(ConfigError::Invalid {
                field: "noise_amplitude",
                reason: "must be non-negative".into(),
            });
        }
        Ok(())
    }

    pub fn geometry(&self) -> ScenarioGeometry {
        ScenarioGeometry {
            omega: (self.domain_lo, self.domain_hi),
            t_end: self.t_end,
            gamma_left: self.gamma_left,
            gamma_right: self.gamma_right,
            u_interval: (self.u_lo, self.u_hi),
            target: SpaceTimePoint::xt(self.target_x, self.target_t),
        }
    }

    pub fn probe(&self) -> ProbeDirection {
        make_probe(self.probe_c, SpatialVec::scalar(self.probe_omega), None)
            .expect("checked probe parameters")
    }

    /// Admissibility gate: margins of the scenario under the probe. Any
    /// violated condition surfaces as the corresponding [`GeometryError`].
    pub fn validate(&self) -> Result<Margins, ConfigError> {
        self.check_fields()?;
        Ok(validate_config(&self.geometry(), &self.probe())?)
    }

    /// The analytic field described by the config (`ForwardGrid` has no
    /// analytic evaluator; the caller runs the solver instead).
    pub fn analytic_field(&self) -> Option<CaloricField> {
        match self.field {
            FieldKind::Constant => Some(CaloricField::constant(self.field_value)),
            FieldKind::Exponential => {
                Some(CaloricField::exponential(SpatialVec::scalar(self.field_coeff)))
            }
            FieldKind::HeatKernel => Some(
                CaloricField::heat_kernel(SpatialVec::scalar(self.field_x_s), self.field_t_s)
                    .expect("field_t_s < 0 checked"),
            ),
            FieldKind::ForwardGrid => None,
        }
    }

    /// Reference value u(target) for error reporting: explicit `reference`
    /// key, else the analytic field's own value at the target.
    pub fn reference_value(&self) -> Option<f64> {
        self.reference.or_else(|| {
            self.analytic_field()
                .map(|f| f.eval(&SpatialVec::scalar(self.target_x), self.target_t))
        })
    }
}
