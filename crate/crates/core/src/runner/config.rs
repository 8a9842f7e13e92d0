//! Declarative experiment description, read from a single JSON document.

use serde::{Deserialize, Serialize};

use crate::adiabatic::SweepSpec;
use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::numerics::TimeGrid;
use crate::qsd::InitialState;
use crate::signals::{JitterSpec, PulseTrainSpec, ShotNoiseSpec, SignalFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Master equation and exact fidelity side by side, one realization.
    MemoryMe2,
    /// Exact fidelity, one realization.
    MemoryQsd,
    /// Exact fidelity averaged over control realizations.
    MemoryEnsemble,
    /// Ground-state amplitude along a sweep.
    Adiabatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub coupling: f64,
    pub memory_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    #[serde(default)]
    pub period: f64,
    #[serde(default)]
    pub duration: f64,
    #[serde(default)]
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlConfig {
    // Braced so unknown keys are still rejected.
    Free {},
    Regular {
        period: f64,
        duration: f64,
        area: f64,
    },
    Jittered {
        period: f64,
        duration: f64,
        area: f64,
        jitter: JitterConfig,
    },
    Chaotic {
        period: f64,
        duration: f64,
        area: f64,
        map_parameter: f64,
        /// Omitted: drawn per realization.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed_amplitude: Option<f64>,
    },
    ShotNoise {
        strength: f64,
        rate: f64,
    },
}

impl ControlConfig {
    pub fn family(&self) -> SignalFamily<f64> {
        let train = |period, duration, area| PulseTrainSpec {
            period,
            duration,
            area,
        };
        match self {
            ControlConfig::Free {} => SignalFamily::Free,
            ControlConfig::Regular {
                period,
                duration,
                area,
            } => SignalFamily::Regular(train(*period, *duration, *area)),
            ControlConfig::Jittered {
                period,
                duration,
                area,
                jitter,
            } => SignalFamily::Jittered {
                pulses: train(*period, *duration, *area),
                jitter: JitterSpec {
                    period: jitter.period,
                    duration: jitter.duration,
                    area: jitter.area,
                },
            },
            ControlConfig::Chaotic {
                period,
                duration,
                area,
                map_parameter,
                seed_amplitude,
            } => SignalFamily::Chaotic {
                pulses: train(*period, *duration, *area),
                map_parameter: *map_parameter,
                seed_amplitude: *seed_amplitude,
            },
            ControlConfig::ShotNoise { strength, rate } => SignalFamily::ShotNoise(ShotNoiseSpec {
                strength: *strength,
                rate: *rate,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalEntry {
    pub label: String,
    pub control: ControlConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassageConfig {
    pub label: String,
    pub passage_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "unit")]
    pub omega: f64,
    pub passages: Vec<PassageConfig>,
}

fn unit() -> f64 {
    1.0
}

fn default_populations() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn default_n_traj() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// For `adiabatic`, `t_max` must be 1: time is measured in units of the
    /// passage time and every passage uses `n_steps` cells.
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<SignalEntry>,
    /// Excited-state populations `|μ|²` of the averaged initial states.
    #[serde(default = "default_populations")]
    pub excited_populations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Excluded from the echoed config: output does not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Excluded from the echoed config.
    #[serde(default, skip_serializing)]
    pub output: Option<String>,
}

/// Module-level objects resolved from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: TimeGrid<f64>,
    pub bath: Option<BathSpec<f64>>,
    pub states: Vec<InitialState<f64>>,
    pub signals: Vec<(String, SignalFamily<f64>)>,
    pub passages: Vec<(String, SweepSpec<f64>, SignalFamily<f64>)>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    /// Compact JSON of everything that determines the output.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Checks every module-level invariant without computing anything.
    pub fn resolve(&self) -> Result<Resolved> {
        let grid = TimeGrid::new(self.grid.t_max, self.grid.n_steps)?;
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", "must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be >= 1"));
        }
        let mut labels = Vec::new();
        let mut claim = |label: &str| -> Result<()> {
            if label.is_empty() || label.contains([',', '\n', '\r']) {
                return Err(Error::invalid(
                    "label",
                    format!("{label:?} is not a valid column label"),
                ));
            }
            if labels.iter().any(|l: &String| l == label) {
                return Err(Error::invalid(
                    "label",
                    format!("duplicate label {label:?}"),
                ));
            }
            labels.push(label.to_string());
            Ok(())
        };
        match self.kind {
            ExperimentKind::Adiabatic => {
                if self.bath.is_some() || !self.signals.is_empty() {
                    return Err(Error::invalid(
                        "kind",
                        "adiabatic experiments take a sweep, not bath or signals",
                    ));
                }
                if self.grid.t_max != 1.0 {
                    return Err(Error::invalid(
                        "grid.t_max",
                        "must be 1 for adiabatic runs (time in units of the passage time)",
                    ));
                }
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::invalid("sweep", "required for adiabatic runs"))?;
                if sweep.passages.is_empty() {
                    return Err(Error::invalid(
                        "sweep.passages",
                        "at least one passage is required",
                    ));
                }
                let mut passages = Vec::new();
                for p in &sweep.passages {
                    claim(&p.label)?;
                    let spec = SweepSpec::new(sweep.omega, p.passage_time)?;
                    TimeGrid::new(p.passage_time, self.grid.n_steps)?;
                    let family = p
                        .control
                        .as_ref()
                        .map_or(SignalFamily::Free, ControlConfig::family);
                    family.validate()?;
                    passages.push((p.label.clone(), spec, family));
                }
                Ok(Resolved {
                    grid,
                    bath: None,
                    states: Vec::new(),
                    signals: Vec::new(),
                    passages,
                })
            }
            kind => {
                if self.sweep.is_some() {
                    return Err(Error::invalid("sweep", "only allowed for adiabatic runs"));
                }
                let bath = self
                    .bath
                    .as_ref()
                    .ok_or_else(|| Error::invalid("bath", "required for memory runs"))?;
                let bath = BathSpec::new(bath.coupling, bath.memory_rate)?;
                if self.excited_populations.is_empty() {
                    return Err(Error::invalid("excited_populations", "must not be empty"));
                }
                let states = self
                    .excited_populations
                    .iter()
                    .map(|p| InitialState::from_excited_population(*p))
                    .collect::<Result<Vec<_>>>()?;
                if self.signals.is_empty() {
                    return Err(Error::invalid("signals", "at least one signal is required"));
                }
                let mut signals = Vec::new();
                for entry in &self.signals {
                    claim(&entry.label)?;
                    let family = entry.control.family();
                    family.validate()?;
                    if kind != ExperimentKind::MemoryEnsemble && family.is_stochastic() {
                        return Err(Error::invalid(
                            "signals",
                            format!("{:?} is random; use kind memory-ensemble", entry.label),
                        ));
                    }
                    signals.push((entry.label.clone(), family));
                }
                Ok(Resolved {
                    grid,
                    bath: Some(bath),
                    states,
                    signals,
                    passages: Vec::new(),
                })
            }
        }
    }
}
