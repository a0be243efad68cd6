//! Run configuration: a small JSON schema with a closed expression grammar
//! for initial conditions, so that runs are reproducible from plain text.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Form, PotentialSpec};
use crate::error::{Error, Result};
use crate::grid::{Density, Grid, ScalarField};
use crate::inertia::{CoefficientSet, ModelSpec, PolyInRho};
use crate::presets::{make_preset, Preset};

pub const DEFAULT_N: usize = 256;
pub const DEFAULT_LENGTH: f64 = 2.0 * std::f64::consts::PI;
pub const DEFAULT_DT: f64 = 1e-3;

/// One term of the initial-condition grammar: sums of c·sin(κx+φ),
/// c·cos(κx+φ), constants and c·exp(c₂·sin(κx)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprTerm {
    Const { c: f64 },
    Sin {
        c: f64,
        kappa: f64,
        #[serde(default)]
        phase: f64,
    },
    Cos {
        c: f64,
        kappa: f64,
        #[serde(default)]
        phase: f64,
    },
    ExpSin { c: f64, c2: f64, kappa: f64 },
}

/// A sum of [`ExprTerm`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Expr(pub Vec<ExprTerm>);

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|t| match *t {
                ExprTerm::Const { c } => c,
                ExprTerm::Sin { c, kappa, phase } => c * (kappa * x + phase).sin(),
                ExprTerm::Cos { c, kappa, phase } => c * (kappa * x + phase).cos(),
                ExprTerm::ExpSin { c, c2, kappa } => c * (c2 * (kappa * x).sin()).exp(),
            })
            .sum()
    }

    pub fn field(&self, grid: &Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| self.eval(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
}

fn default_n() -> usize {
    DEFAULT_N
}

fn default_length() -> f64 {
    DEFAULT_LENGTH
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: DEFAULT_N, length: DEFAULT_LENGTH }
    }
}

/// One monomial of a coefficient polynomial: c ρ^power attached to ∂^i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffTerm {
    pub i: usize,
    pub c: f64,
    pub power: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Quadratic { c: f64 },
    InternalEnergy { terms: Vec<EnergyTerm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTerm {
    pub c: f64,
    pub power: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub k: usize,
    pub coefficients: Vec<CoeffTerm>,
    #[serde(default = "default_potential")]
    pub potential: PotentialConfig,
}

fn default_potential() -> PotentialConfig {
    PotentialConfig::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub rho: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_dot: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_form")]
    pub form: String,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_form() -> String {
    "momentum".to_string()
}

fn default_snapshot_every() -> usize {
    10
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            t_end: default_t_end(),
            dt: default_dt(),
            form: default_form(),
            snapshot_every: default_snapshot_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default)]
    pub write_fields: bool,
}

fn default_directory() -> String {
    "out".to_string()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_directory(), write_fields: false }
    }
}

/// The full run configuration with defaults filled in after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parse and validate a JSON run configuration. Unknown keys are rejected
/// and errors carry the JSON path of the offending field.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |path: &str, message: &str| Error::Config {
            path: path.to_string(),
            message: message.to_string(),
        };
        if !(self.grid.length > 0.0) {
            return Err(err("grid.length", "must be positive"));
        }
        if self.grid.n < 4 || self.grid.n % 2 != 0 {
            return Err(err("grid.n", "must be an even integer >= 4"));
        }
        match (&self.model.preset, &self.model.custom) {
            (Some(_), Some(_)) => return Err(err("model", "give either preset or custom, not both")),
            (None, None) => return Err(err("model", "one of preset or custom is required")),
            (Some(name), None) => {
                Preset::from_str(name).map_err(|e| err("model.preset", &e.to_string()))?;
            }
            (None, Some(_)) => {
                self.build_model()?;
            }
        }
        if !(self.time.dt > 0.0) {
            return Err(err("time.dt", "must be positive"));
        }
        if !(self.time.t_end >= 0.0) {
            return Err(err("time.t_end", "must be nonnegative"));
        }
        self.form()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.grid.n, self.grid.length)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        if let Some(name) = &self.model.preset {
            return Ok(make_preset(Preset::from_str(name)?));
        }
        let custom = self.model.custom.as_ref().expect("validated: preset or custom");
        let mut terms: Vec<Vec<(f64, u32)>> = vec![Vec::new(); custom.k + 1];
        for term in &custom.coefficients {
            if term.i > custom.k {
                return Err(Error::Config {
                    path: "model.custom.coefficients".to_string(),
                    message: format!("derivative index {} exceeds k = {}", term.i, custom.k),
                });
            }
            terms[term.i].push((term.c, term.power));
        }
        let coeffs: Vec<PolyInRho> = terms.into_iter().map(PolyInRho::new).collect::<Result<_>>()?;
        let potential = match &custom.potential {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Quadratic { c } => PotentialSpec::Quadratic(*c),
            PotentialConfig::InternalEnergy { terms } => {
                let poly = PolyInRho::new(terms.iter().map(|t| (t.c, t.power)).collect())?;
                PotentialSpec::InternalEnergy(poly)
            }
        };
        Ok(ModelSpec::new(CoefficientSet::new(coeffs)?, potential, "custom"))
    }

    pub fn initial_density(&self, grid: &Arc<Grid>) -> Result<Density> {
        Density::new(self.initial.rho.field(grid))
    }

    pub fn form(&self) -> Result<Form> {
        match self.time.form.as_str() {
            "momentum" => Ok(Form::Momentum),
            "velocity" => Ok(Form::Velocity),
            other => Err(Error::Config {
                path: "time.form".to_string(),
                message: format!("expected \"momentum\" or \"velocity\", got \"{other}\""),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimal_burgers_config_fills_defaults() {
        let text = r#"{
            "model": {"preset": "burgers"},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "sin", "c": 0.1, "kappa": 1.0}]}
        }"#;
        let config = parse_config(text).unwrap();
        assert_eq!(config.grid.n, 256);
        assert_abs_diff_eq!(config.grid.length, DEFAULT_LENGTH, epsilon = 1e-15);
        assert_abs_diff_eq!(config.time.dt, 1e-3, epsilon = 1e-18);
        let model = config.build_model().unwrap();
        assert_eq!(model.label, "burgers");
    }

    #[test]
    fn sgn_preset_builds() {
        let text = r#"{
            "model": {"preset": "sgn"},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "sin", "c": 0.1, "kappa": 1.0}]},
            "time": {"t_end": 1.0}
        }"#;
        let config = parse_config(text).unwrap();
        let model = config.build_model().unwrap();
        assert_eq!(model.label, "sgn");
        assert_eq!(model.order(), 1);
    }

    #[test]
    fn custom_without_a0_is_rejected() {
        let text = r#"{
            "model": {"custom": {"k": 1, "coefficients": [{"i": 1, "c": 1.0, "power": 0}]}},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "const", "c": 0.0}]}
        }"#;
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("a0 must be positive"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = r#"{
            "model": {"preset": "burgers"},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "const", "c": 0.0}]},
            "time": {"dt": 0.001, "stepper": "rk4"}
        }"#;
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("time") && msg.contains("stepper"), "{msg}");
    }

    #[test]
    fn expression_grammar_evaluates() {
        let expr = Expr(vec![
            ExprTerm::Const { c: 1.0 },
            ExprTerm::Sin { c: 0.5, kappa: 2.0, phase: 0.0 },
            ExprTerm::ExpSin { c: 0.1, c2: 1.0, kappa: 1.0 },
        ]);
        let x = 0.7_f64;
        let expect = 1.0 + 0.5 * (2.0 * x).sin() + 0.1 * x.sin().exp();
        assert_abs_diff_eq!(expr.eval(x), expect, epsilon = 1e-15);
    }

    #[test]
    fn config_round_trips_through_json() {
        let text = r#"{
            "grid": {"n": 64, "length": 6.283185307179586},
            "model": {"preset": "shallow_water"},
            "initial": {"rho": [{"kind": "const", "c": 1.0}],
                        "u": [{"kind": "sin", "c": 0.1, "kappa": 1.0}]},
            "time": {"t_end": 0.5, "dt": 0.01, "form": "momentum", "snapshot_every": 5},
            "output": {"directory": "out", "write_fields": true}
        }"#;
        let config = parse_config(text).unwrap();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let reparsed = parse_config(&json).unwrap();
        assert_eq!(config, reparsed);
    }
}
