//! Run configuration: a JSON or TOML document, with command-line overrides
//! applied on the parsed tree before it is typed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::expr::{parse, SystemDef, SystemSource};
use crate::monodromy::{Domain, ProbeOptions};
use crate::obstruction::ObstructionOptions;
use crate::odeint::IntegratorOptions;
use crate::systems;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Probe,
    Scan,
}

/// A parameter value: a bare real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Real(f64),
    Complex(Complex64),
}

impl ParamValue {
    pub fn value(self) -> Complex64 {
        match self {
            ParamValue::Real(r) => Complex64::new(r, 0.0),
            ParamValue::Complex(z) => z,
        }
    }
}

/// Either a catalog entry with parameters or an inline DSL definition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dsl: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemDef, ConfigError> {
        let params: Vec<(String, Complex64)> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.value()))
            .collect();
        match (&self.catalog, &self.dsl) {
            (Some(name), None) => {
                systems::build(name, &params).map_err(|e| invalid(format!("system: {e}")))
            }
            (None, Some(text)) => SystemSource::parse(text)
                .and_then(|s| s.build(&params))
                .map_err(|e| invalid(format!("system.dsl: {e}"))),
            (Some(_), Some(_)) => Err(invalid("system: give either `catalog` or `dsl`, not both")),
            (None, None) => Err(invalid("system: one of `catalog` or `dsl` is required")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub initial_state: Vec<Complex64>,
    pub t0: Complex64,
    pub mode: Mode,
    #[serde(default)]
    pub candidates: Vec<Complex64>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub probe: ProbeOptions,
    #[serde(default)]
    pub obstruction: ObstructionOptions,
    #[serde(default)]
    pub output: OutputPaths,
    /// Worker threads for probing; the machine's parallelism when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<RunConfig, ConfigError> {
        serde_json::from_value(value).map_err(|e| invalid(e.to_string()))
    }

    /// Probe options with the integrator section folded in.
    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions {
            integrator: self.integrator,
            ..self.probe.clone()
        }
    }

    /// Build the system and check the remaining fields against it.
    pub fn validate(&self) -> Result<SystemDef, ConfigError> {
        let sys = self.system.build()?;
        if self.initial_state.len() != sys.dim() {
            return Err(invalid(format!(
                "initial_state has {} entries but system `{}` has dimension {}",
                self.initial_state.len(),
                sys.name,
                sys.dim()
            )));
        }
        match self.mode {
            Mode::Probe if self.candidates.is_empty() => {
                return Err(invalid("candidates: probe mode needs at least one candidate"))
            }
            Mode::Scan if self.domain.is_none() => {
                return Err(invalid("domain: scan mode needs a domain rectangle"))
            }
            Mode::Scan if self.grid.is_none() => {
                return Err(invalid("grid: scan mode needs grid dimensions"))
            }
            _ => {}
        }
        if let Some(d) = &self.domain {
            if !(d.width() > 0.0 && d.height() > 0.0) {
                return Err(invalid("domain: rectangle has zero area"));
            }
        }
        if let Some((nx, ny)) = self.grid {
            if nx == 0 || ny == 0 {
                return Err(invalid("grid: dimensions must be at least 1"));
            }
        }
        if self.jobs == Some(0) {
            return Err(invalid("jobs: must be at least 1"));
        }
        Ok(sys)
    }
}

/// Read a config file into an untyped tree; `.toml` files are parsed as
/// TOML, everything else as JSON.
pub fn load_tree(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        let parsed: toml::Value = toml::from_str(&text)?;
        Ok(serde_json::to_value(parsed)?)
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}

/// Set `path` (a list of object keys) in `tree`, creating objects on the way.
pub fn set_path(tree: &mut Value, path: &[&str], value: Value) {
    let mut node = tree;
    for key in path {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(key.to_string())
            .or_insert(Value::Null);
    }
    *node = value;
}

/// Parse a constant expression such as `0.2+2.5*i` or `-1.25`.
pub fn parse_complex(text: &str) -> Result<Complex64, ConfigError> {
    let e = parse(text).map_err(|e| invalid(format!("`{text}`: {e}")))?;
    e.eval(&Default::default())
        .map_err(|e| invalid(format!("`{text}`: {e}")))
}

/// Comma-separated constant expressions.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, ConfigError> {
    text.split(',').map(|s| parse_complex(s.trim())).collect()
}

pub fn complex_value(z: Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}
