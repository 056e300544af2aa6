//! Run configuration: one JSON document, leaves overridable by dotted path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::Integrator;
use crate::error::{Error, Result};
use crate::genvalue::SolveOptions;
use crate::grid::{Domain, GridSpec, PhaseGrid};
use crate::io::{read_psf, Format};
use crate::observable::{Monomial, ObservableSpec, Polynomial};
use crate::star::DeformationParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_q: usize,
    pub n_p: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let s = GridSpec::default();
        GridConfig {
            n_q: s.n_q,
            n_p: s.n_p,
            q_min: s.q_min,
            q_max: s.q_max,
            p_min: s.p_min,
            p_max: s.p_max,
        }
    }
}

impl GridConfig {
    pub fn build(&self, hbar: f64) -> Result<PhaseGrid> {
        PhaseGrid::new(GridSpec {
            n_q: self.n_q,
            n_p: self.n_p,
            q_min: self.q_min,
            q_max: self.q_max,
            p_min: self.p_min,
            p_max: self.p_max,
            hbar,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ObservableConfig {
    /// `(p^2 + omega^2 q^2) / 2`
    Oscillator {
        omega: f64,
    },
    /// `p^2/2 + q^4/4`
    Quartic,
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// Samples on the run grid from a `.psf` file.
    Table {
        path: PathBuf,
    },
}

impl Default for ObservableConfig {
    fn default() -> Self {
        ObservableConfig::Oscillator { omega: 1.0 }
    }
}

impl ObservableConfig {
    pub fn build(&self, grid: &PhaseGrid) -> Result<ObservableSpec> {
        Ok(match self {
            ObservableConfig::Oscillator { omega } => Polynomial::harmonic(*omega).into(),
            ObservableConfig::Quartic => Polynomial::quartic().into(),
            ObservableConfig::Polynomial { terms } => Polynomial::from_monomials(terms).into(),
            ObservableConfig::Table { path } => {
                let table = read_psf(path)?;
                if table.domain() != Domain::PositionMomentum || table.grid() != grid {
                    return Err(Error::Config(format!(
                        "table {} must be a (q, p) field on the run grid",
                        path.display()
                    )));
                }
                ObservableSpec::Tabulated(table)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        center: [f64; 2],
        /// Standard deviations along q and p; the oscillator ground widths by default.
        #[serde(default)]
        widths: Option<[f64; 2]>,
    },
    Eigenstate {
        #[serde(default)]
        observable: Option<ObservableConfig>,
        index: usize,
    },
    Ring {
        energy: f64,
        /// Gaussian band width in energy; a sharp one-cell band when absent.
        #[serde(default)]
        band: Option<f64>,
    },
    Point {
        q: f64,
        p: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Gaussian {
            center: [1.0, 0.0],
            widths: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveCommand {
    pub n_states: usize,
    pub tolerances: SolveOptions,
}

impl Default for SolveCommand {
    fn default() -> Self {
        SolveCommand {
            n_states: 5,
            tolerances: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveCommand {
    pub initial: InitialState,
    pub dt: f64,
    pub n_steps: usize,
    pub stride: usize,
    pub integrator: Integrator,
    pub monitor_tolerance: f64,
}

impl Default for EvolveCommand {
    fn default() -> Self {
        EvolveCommand {
            initial: InitialState::default(),
            dt: 1e-3,
            n_steps: 1000,
            stride: 100,
            integrator: Integrator::Rk4,
            monitor_tolerance: 1e-6,
        }
    }
}

pub const ALL_SUITES: [&str; 5] = ["star_algebra", "genvalue", "oracle", "dynamics", "calibration"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCommand {
    pub suites: Vec<String>,
}

impl Default for VerifyCommand {
    fn default() -> Self {
        VerifyCommand {
            suites: ALL_SUITES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    /// Purity of the closed-form ground pseudodensity.
    #[default]
    ClosedForm,
    /// Uncertainty volume of solved ground states.
    Numerical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateCommand {
    pub omega: f64,
    pub method: CalibrationMethod,
}

impl Default for CalibrateCommand {
    fn default() -> Self {
        CalibrateCommand {
            omega: 1.0,
            method: CalibrationMethod::ClosedForm,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportCommand {
    /// A `.psf` field file to convert.
    pub input: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Solve(SolveCommand),
    Evolve(EvolveCommand),
    Verify(VerifyCommand),
    Calibrate(CalibrateCommand),
    Export(ExportCommand),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Evolve(_) => "evolve",
            Command::Verify(_) => "verify",
            Command::Calibrate(_) => "calibrate",
            Command::Export(_) => "export",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("moyal-out"),
            formats: vec![Format::Psf],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: DeformationParams,
    #[serde(default)]
    pub observable: ObservableConfig,
    pub command: Command,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Builds a config from an optional JSON document, dotted overrides and
    /// the verb, which supplies a default command block when none is given.
    pub fn resolve(document: Option<Value>, overrides: &[String], verb: &str) -> Result<RunConfig> {
        let mut doc = document.unwrap_or_else(|| Value::Object(Default::default()));
        if !doc.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        if doc.get("command").is_none() {
            doc["command"] = serde_json::json!({ verb: {} });
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.command.verb() != verb {
            return Err(Error::Config(format!(
                "config holds a '{}' command but the verb is '{verb}'",
                cfg.command.verb()
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Value> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.build(self.params.hbar)?;
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats is empty".into()));
        }
        let missing = |p: &Path| Error::Config(format!("referenced path {} does not exist", p.display()));
        if let ObservableConfig::Table { path } = &self.observable {
            if !path.exists() {
                return Err(missing(path));
            }
        }
        match &self.command {
            Command::Solve(s) if s.n_states == 0 => Err(Error::Config("n_states must be positive".into())),
            Command::Evolve(e) => {
                if let InitialState::File { path } = &e.initial {
                    if !path.exists() {
                        return Err(missing(path));
                    }
                }
                if e.n_steps == 0 || e.stride == 0 {
                    return Err(Error::Config("n_steps and stride must be positive".into()));
                }
                Ok(())
            }
            Command::Verify(v) => {
                for s in &v.suites {
                    if !ALL_SUITES.contains(&s.as_str()) {
                        return Err(Error::Config(format!(
                            "unknown suite '{s}' (known: {})",
                            ALL_SUITES.join(", ")
                        )));
                    }
                }
                Ok(())
            }
            Command::Calibrate(c) if !(c.omega > 0.0 && c.omega.is_finite()) => {
                Err(Error::Config("omega must be positive".into()))
            }
            Command::Export(x) if !x.input.exists() => Err(missing(&x.input)),
            _ => Ok(()),
        }
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON, else taken as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path '{path}'")));
    }
    let mut node = doc;
    for k in &keys[..keys.len() - 1] {
        if node.get(*k).is_none_or(|v| !v.is_object()) {
            if !node.is_object() {
                return Err(Error::Config(format!("override path '{path}' crosses a non-object")));
            }
            node[*k] = Value::Object(Default::default());
        }
        node = node.get_mut(*k).expect("just ensured");
    }
    if !node.is_object() {
        return Err(Error::Config(format!("override path '{path}' crosses a non-object")));
    }
    node[keys[keys.len() - 1]] = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::resolve(
            None,
            &[
                "params.b=0".into(),
                "command.solve.n_states=3".into(),
                "grid.n_q=32".into(),
            ],
            "solve",
        )
        .unwrap();
        assert_eq!(cfg.params.b, 0.0);
        assert_eq!(cfg.grid.n_q, 32);
        match cfg.command {
            Command::Solve(s) => assert_eq!(s.n_states, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violations_are_config_errors() {
        let bad = [
            (serde_json::json!({"grid": {"n_qq": 3}}), "solve"),
            (serde_json::json!({"params": {"hbar": 1.0, "b": -1.0}}), "solve"),
            (serde_json::json!({"command": {"evolve": {}}}), "solve"),
            (
                serde_json::json!({"command": {"verify": {"suites": ["nope"]}}}),
                "verify",
            ),
            (
                serde_json::json!({"command": {"evolve": {"initial": {"spiral": {}}}}}),
                "evolve",
            ),
        ];
        for (doc, verb) in bad {
            assert!(matches!(
                RunConfig::resolve(Some(doc), &[], verb),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn override_values_fall_back_to_strings() {
        let mut v = serde_json::json!({});
        apply_override(&mut v, "output.directory=some/dir").unwrap();
        apply_override(&mut v, "output.formats=[\"csv\"]").unwrap();
        assert_eq!(v["output"]["directory"], "some/dir");
        assert_eq!(v["output"]["formats"][0], "csv");
        assert!(apply_override(&mut v, "novalue").is_err());
    }
}
