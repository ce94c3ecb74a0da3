//! Scenario files: a TOML document naming the experiment, the neuron
//! configuration and the experiment-specific parameters.

use std::fs;
use std::path::{Path, PathBuf};

use mixfeed_core::analysis::{CurveGrid, SweepInput, SweepParam};
use mixfeed_core::model::{BiasConfiguration, InputSignal};
use mixfeed_core::presets;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Simulate,
    Staircase,
    NeuromodSweep,
    TemperatureSweep,
    InactivationCompare,
    Curves,
    Classify,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Staircase => "staircase",
            ScenarioKind::NeuromodSweep => "neuromod-sweep",
            ScenarioKind::TemperatureSweep => "temperature-sweep",
            ScenarioKind::InactivationCompare => "inactivation-compare",
            ScenarioKind::Curves => "curves",
            ScenarioKind::Classify => "classify",
        }
    }

    /// Kinds whose simulation length comes from `solver.t_end`.
    fn needs_horizon(self) -> bool {
        matches!(
            self,
            ScenarioKind::Simulate | ScenarioKind::InactivationCompare | ScenarioKind::TemperatureSweep
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Simulated horizon (s).
    pub t_end: Option<f64>,
    /// Fixed step (s); defaults to `tau_f / 50`.
    pub dt: Option<f64>,
    pub record_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaircaseSpec {
    /// Input levels (A), applied in order from t = 0.
    pub levels: Vec<f64>,
    /// Time spent at each level (s).
    pub dwell: f64,
    /// Time excluded at the start of each level (s); defaults to `3 tau_u`.
    pub settle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub param: SweepParam,
    /// Inclusive parameter range (A).
    pub range: [f64; 2],
    pub steps: usize,
    /// Confirmation simulation input; no simulations when absent.
    pub input: Option<SweepInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSpec {
    /// Temperature at which the biases were set (K).
    pub t_ref: f64,
    pub temperatures: Vec<f64>,
    /// Per-kelvin current growth; defaults to the calibrated model.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Name of a shipped preset; mutually exclusive with `cfg`.
    pub preset: Option<String>,
    pub cfg: Option<BiasConfiguration>,
    /// Applied current for `simulate`, `temperature-sweep` and `inactivation-compare`.
    pub input: Option<InputSignal>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub grid: Option<CurveGrid>,
    pub staircase: Option<StaircaseSpec>,
    pub sweep: Option<SweepSpec>,
    pub temperature: Option<TemperatureSpec>,
    pub output: Option<OutputSpec>,
}

impl Scenario {
    /// Minimal scenario running `kind` on a shipped preset.
    pub fn from_preset(kind: ScenarioKind, preset: &str) -> Self {
        Self {
            kind,
            preset: Some(preset.to_string()),
            cfg: None,
            input: None,
            solver: SolverSpec::default(),
            grid: None,
            staircase: None,
            sweep: None,
            temperature: None,
            output: None,
        }
    }

    /// The neuron configuration, resolving `preset` if needed.
    pub fn config(&self) -> Result<BiasConfiguration> {
        match (&self.cfg, &self.preset) {
            (Some(_), Some(_)) => Err(HarnessError::Scenario(
                "give either `preset` or `cfg`, not both".into(),
            )),
            (Some(c), None) => Ok(c.clone()),
            (None, Some(name)) => presets::get(name).ok_or_else(|| {
                HarnessError::Scenario(format!(
                    "unknown preset `{name}` (available: {})",
                    presets::NAMES.join(", ")
                ))
            }),
            (None, None) => Err(HarnessError::Scenario("missing `cfg` or `preset`".into())),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .as_ref()
            .map(|o| o.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Checks that every parameter the kind needs is present, before any work.
    pub fn validate(&self) -> Result<()> {
        let cfg = self.config()?;
        cfg.validate()?;
        let missing = |what: &str| {
            HarnessError::Scenario(format!("`{}` needs a [{what}] section", self.kind.as_str()))
        };
        if self.kind.needs_horizon() {
            match self.solver.t_end {
                Some(t) if t.is_finite() && t > 0.0 => {}
                Some(_) => return Err(HarnessError::Scenario("solver.t_end must be > 0".into())),
                None => return Err(HarnessError::Scenario("missing solver.t_end".into())),
            }
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        match self.kind {
            ScenarioKind::Simulate | ScenarioKind::InactivationCompare | ScenarioKind::TemperatureSweep => {
                self.input.as_ref().ok_or_else(|| missing("input"))?.validate()?;
            }
            ScenarioKind::Staircase => {
                let s = self.staircase.as_ref().ok_or_else(|| missing("staircase"))?;
                if s.levels.is_empty() {
                    return Err(HarnessError::Scenario("staircase.levels is empty".into()));
                }
                if !(s.dwell.is_finite() && s.dwell > 0.0) {
                    return Err(HarnessError::Scenario("staircase.dwell must be > 0".into()));
                }
                let settle = s.settle.unwrap_or(3.0 * cfg.tau_u);
                if !(settle >= 0.0 && settle < s.dwell) {
                    return Err(HarnessError::Scenario(
                        "staircase.settle must be in [0, dwell)".into(),
                    ));
                }
                InputSignal::staircase(&s.levels, s.dwell).validate()?;
            }
            ScenarioKind::NeuromodSweep => {
                let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                if s.input.is_some() && self.solver.t_end.is_none() {
                    return Err(HarnessError::Scenario(
                        "confirmation simulations need solver.t_end".into(),
                    ));
                }
            }
            ScenarioKind::Curves | ScenarioKind::Classify => {}
        }
        if self.kind == ScenarioKind::TemperatureSweep {
            let t = self.temperature.as_ref().ok_or_else(|| missing("temperature"))?;
            if t.temperatures.is_empty() {
                return Err(HarnessError::Scenario("temperature.temperatures is empty".into()));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(s).map_err(|e| HarnessError::Scenario(format!("cannot serialize: {e}")))
}

pub fn save_config(s: &Scenario, path: &Path) -> Result<()> {
    let text = to_toml(s)?;
    fs::write(path, text).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}
