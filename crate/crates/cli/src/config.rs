//! TOML experiment configuration. Units are part of every field name.

use std::fmt;
use std::path::{Path, PathBuf};

use mqb_core::comparison::Metric;
use mqb_core::model::{ChannelEntry, LindbladChannel, ModelFile};
use mqb_core::ode::Tolerances;
use mqb_core::pipeline::{doubling_steps, CaseConfig, ColumnSpec, ModeNoise, ModelSource, ScalingSpec, SystemKind};
use mqb_core::trotter::TrotterOrder;
use serde::{Deserialize, Serialize};

/// A configuration problem, with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub time: TimeConfig,
    pub solver: SolverConfig,
    pub isolated: ColumnConfig,
    pub open: ColumnConfig,
    pub scaling: ScalingConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Built-in model name; only `pyrazine` exists.
    pub builtin: Option<String>,
    /// Model file, relative to the configuration file.
    pub file: Option<PathBuf>,
    /// Mode count of the built-in model.
    pub modes: usize,
    /// Fock levels per mode.
    pub cutoff: usize,
    /// Electronic state whose population error is reported.
    pub population_state: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            builtin: None,
            file: None,
            modes: 2,
            cutoff: 4,
            population_state: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_final_s: f64,
    /// Sample count K of the time grid, endpoints included.
    pub samples: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_final_s: 150e-15,
            samples: 31,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest norm a truncated initial coherent state may lose.
    pub truncation_loss_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let t = Tolerances::reference();
        Self {
            rtol: t.rtol,
            atol: t.atol,
            truncation_loss_tol: mqb_core::model::REDUCED_CUTOFF_LOSS_TOL,
        }
    }
}

/// Settings of one system. Unset fields take that system's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnConfig {
    pub scaling_f: Option<f64>,
    /// Molecular channels harnessed by the open system.
    pub usable_channels: Option<Vec<ChannelEntry>>,
    pub error_noise: Option<ModeNoise>,
    /// Simulator error rates sampled for the MQB curve.
    pub error_rates_per_s: Option<Vec<f64>>,
    /// Rate at which the MQB error is matched.
    pub match_rate_per_s: Option<f64>,
    /// The first order is used for matching.
    pub trotter_orders: Option<Vec<u32>>,
    pub steps: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub modes: Vec<usize>,
    pub metric: String,
    pub systems: Vec<SystemKind>,
    pub open_max_system_qubits: usize,
    pub isolated_steps: Vec<usize>,
    pub open_steps: Vec<usize>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            modes: vec![2, 3, 4, 5],
            metric: "eps_F".into(),
            systems: vec![SystemKind::Isolated, SystemKind::Open],
            open_max_system_qubits: 9,
            isolated_steps: doubling_steps(31, 10),
            open_steps: vec![480, 960, 1920, 3840],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            cache: ".mqb-cache".into(),
        }
    }
}

/// `eps_F` or `eps_<n>`.
pub fn parse_metric(name: &str) -> Option<Metric> {
    if name == "eps_F" {
        return Some(Metric::Infidelity);
    }
    name.strip_prefix("eps_")?.parse().ok().map(Metric::Population)
}

fn default_rates() -> Vec<f64> {
    vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0]
}

fn check_rates(field: &str, rates: &[f64]) -> Result<(), ConfigError> {
    for (i, r) in rates.iter().enumerate() {
        if !(r.is_finite() && *r >= 0.0) {
            return Err(ConfigError::new(format!("{field}[{i}]"), format!("rate must be >= 0, got {r}")));
        }
    }
    Ok(())
}

fn check_steps(field: &str, steps: &[usize]) -> Result<(), ConfigError> {
    if steps.is_empty() {
        return Err(ConfigError::new(field, "at least one step count is required"));
    }
    if let Some(i) = steps.iter().position(|&n| n == 0) {
        return Err(ConfigError::new(format!("{field}[{i}]"), "step counts must be positive"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string()))?;
        if let Some(f) = &cfg.model.file {
            if f.is_relative() {
                cfg.model.file = Some(base.join(f));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| ConfigError {
            field: e.field,
            message: format!("{} ({})", e.message, path.display()),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.model.builtin, &self.model.file) {
            (Some(_), Some(_)) => return Err(ConfigError::new("model", "give either builtin or file, not both")),
            (Some(name), None) if name != "pyrazine" => {
                return Err(ConfigError::new("model.builtin", format!("unknown model {name:?}")))
            }
            (None, Some(f)) if !f.is_file() => {
                return Err(ConfigError::new("model.file", format!("{} does not exist", f.display())))
            }
            _ => {}
        }
        if self.model.modes < 1 {
            return Err(ConfigError::new("model.modes", "at least one mode is required"));
        }
        if self.model.cutoff < 1 {
            return Err(ConfigError::new("model.cutoff", "cutoff must be positive"));
        }
        if !(self.time.t_final_s > 0.0 && self.time.t_final_s.is_finite()) {
            return Err(ConfigError::new("time.t_final_s", "must be positive"));
        }
        if self.time.samples < 2 {
            return Err(ConfigError::new("time.samples", "at least two samples are required"));
        }
        if !(self.solver.rtol > 0.0 && self.solver.atol >= 0.0) {
            return Err(ConfigError::new("solver", "tolerances must be positive"));
        }
        if !(self.solver.truncation_loss_tol >= 0.0) {
            return Err(ConfigError::new("solver.truncation_loss_tol", "must be >= 0"));
        }
        for system in [SystemKind::Isolated, SystemKind::Open] {
            let name = system.name();
            let col = self.column(system);
            if let Some(f) = col.scaling_f {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(ConfigError::new(format!("{name}.scaling_f"), "must be positive"));
                }
            }
            if let Some(r) = &col.error_rates_per_s {
                if r.is_empty() {
                    return Err(ConfigError::new(format!("{name}.error_rates_per_s"), "at least one rate is required"));
                }
                check_rates(&format!("{name}.error_rates_per_s"), r)?;
            }
            if let Some(r) = col.match_rate_per_s {
                check_rates(&format!("{name}.match_rate_per_s"), &[r])?;
            }
            if let Some(ch) = &col.usable_channels {
                check_rates(
                    &format!("{name}.usable_channels"),
                    &ch.iter().map(|c| c.rate_per_s).collect::<Vec<_>>(),
                )?;
            }
            if let Some(orders) = &col.trotter_orders {
                if orders.is_empty() {
                    return Err(ConfigError::new(format!("{name}.trotter_orders"), "at least one order is required"));
                }
                for (i, &p) in orders.iter().enumerate() {
                    if TrotterOrder::from_int(p).is_err() || (system == SystemKind::Open && p != 1) {
                        return Err(ConfigError::new(
                            format!("{name}.trotter_orders[{i}]"),
                            format!("unsupported order {p} for the {name} system"),
                        ));
                    }
                }
            }
            if let Some(s) = &col.steps {
                check_steps(&format!("{name}.steps"), s)?;
            }
        }
        if parse_metric(&self.scaling.metric).is_none() {
            return Err(ConfigError::new("scaling.metric", format!("unknown metric {:?}", self.scaling.metric)));
        }
        if let Some(i) = self.scaling.modes.iter().position(|&m| m < 2) {
            return Err(ConfigError::new(format!("scaling.modes[{i}]"), "mode counts must be >= 2"));
        }
        check_steps("scaling.isolated_steps", &self.scaling.isolated_steps)?;
        check_steps("scaling.open_steps", &self.scaling.open_steps)?;
        Ok(())
    }

    fn column(&self, system: SystemKind) -> &ColumnConfig {
        match system {
            SystemKind::Isolated => &self.isolated,
            SystemKind::Open => &self.open,
        }
    }

    fn model_source(&self) -> Result<ModelSource, ConfigError> {
        match &self.model.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("model.file", format!("cannot read {}: {e}", path.display())))?;
                let model = ModelFile::parse(&text).map_err(|e| ConfigError::new("model.file", e.to_string()))?;
                Ok(ModelSource::File { model: Box::new(model) })
            }
            None => Ok(ModelSource::Pyrazine {
                modes: self.model.modes,
            }),
        }
    }

    pub fn case_config(&self, system: SystemKind) -> Result<CaseConfig, ConfigError> {
        let col = self.column(system);
        let mut cfg = CaseConfig::pyrazine(system, self.model.cutoff);
        cfg.model = self.model_source()?;
        cfg.t_final_s = self.time.t_final_s;
        cfg.samples = self.time.samples;
        cfg.tolerances = Tolerances::new(self.solver.rtol, self.solver.atol)
            .map_err(|e| ConfigError::new("solver", e.to_string()))?;
        cfg.truncation_loss_tol = self.solver.truncation_loss_tol;
        cfg.population_state = self.model.population_state;
        if let Some(f) = col.scaling_f {
            cfg.scaling_f = f;
        }
        if let Some(n) = col.error_noise {
            cfg.error_noise = n;
        }
        if let Some(ch) = &col.usable_channels {
            let field = format!("{}.usable_channels", system.name());
            cfg.usable_channels = Some(
                ch.iter()
                    .map(|c| LindbladChannel::new(c.kind, c.rate_per_s))
                    .collect::<mqb_core::Result<Vec<_>>>()
                    .map_err(|e| ConfigError::new(field, e.to_string()))?,
            );
        }
        Ok(cfg)
    }

    pub fn orders(&self, system: SystemKind) -> Vec<TrotterOrder> {
        self.column(system)
            .trotter_orders
            .clone()
            .unwrap_or_else(|| vec![1])
            .into_iter()
            .map(|p| TrotterOrder::from_int(p).expect("validated"))
            .collect()
    }

    pub fn column_spec(&self, system: SystemKind) -> Result<ColumnSpec, ConfigError> {
        let col = self.column(system);
        let default_match = match system {
            SystemKind::Isolated => 30.0,
            SystemKind::Open => 0.2,
        };
        Ok(ColumnSpec {
            case: self.case_config(system)?,
            gamma_err_per_s: col.match_rate_per_s.unwrap_or(default_match),
            mqb_gammas_per_s: col.error_rates_per_s.clone().unwrap_or_else(default_rates),
            order: self.orders(system)[0],
            steps: col
                .steps
                .clone()
                .unwrap_or_else(|| doubling_steps(self.time.samples, 10)),
        })
    }

    pub fn scaling_metric(&self) -> Metric {
        parse_metric(&self.scaling.metric).expect("validated")
    }

    /// Scaling settings: the MQB side is sampled at the matched rate only.
    pub fn scaling_spec(&self, system: SystemKind) -> Result<ScalingSpec, ConfigError> {
        let mut column = self.column_spec(system)?;
        column.mqb_gammas_per_s = vec![column.gamma_err_per_s];
        column.steps = match system {
            SystemKind::Isolated => self.scaling.isolated_steps.clone(),
            SystemKind::Open => self.scaling.open_steps.clone(),
        };
        Ok(ScalingSpec {
            column,
            modes: self.scaling.modes.clone(),
            metric: self.scaling_metric(),
            open_max_system_qubits: self.scaling.open_max_system_qubits,
        })
    }
}
