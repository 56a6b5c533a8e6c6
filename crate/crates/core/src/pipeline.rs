//! End-to-end cases: reference dynamics, MQB and qubit-only error sweeps, matching and volumes.

use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::comparison::{
    compute_advantage, fit_and_extrapolate, fit_interpolant, match_curves, Abscissa, ErrorCurve, ErrorTracker,
    MatchResult, Metric, RunErrors, TailFit, VolumeReport,
};
use crate::dilation::{build_dilated_pauli_sum, count_resources_open, simulate_open, DilatedStep, DilationPlan};
use crate::dynamics::{
    emulate_mqb_problem, mqb_cost, step_times, LindbladProblem, MQBNoiseModel, MqbCost, SampleState, TimeGrid, Trajectory,
    UnitaryPropagator,
};
use crate::encoding::{embed_fock_matrix, embed_fock_state, encode_vc_model, PauliSum, Prune};
use crate::error::{invalid, Result};
use crate::model::{
    build_initial_state_with_loss, extend_pyrazine, per_mode_channels, pyrazine_initial_state, vibrational_dephasing,
    vibrational_heating, ChannelKind, LindbladChannel, ModelFile, PyrazineParams, VCModel,
};
use crate::ode::Tolerances;
use crate::quantum::{DensityMatrix, RegisterLayout, StateVector};
use crate::sweep::par_map;
use crate::trotter::{count_resources, simulate_trotter_with, ResourceCount, TrotterOrder, TrotterPlan, TrotterStepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Simulator errors are vibrational dephasing on every mode.
    Isolated,
    /// Molecular vibrational dephasing is harnessed; simulator errors are vibrational heating.
    Open,
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Isolated => "isolated",
            SystemKind::Open => "open",
        }
    }
}

/// Where the vibronic model comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ModelSource {
    /// Pyrazine, extended with copies of the coupling mode beyond two modes.
    Pyrazine { modes: usize },
    /// A parsed model file; the whole content is part of every cache key.
    File { model: Box<ModelFile> },
}

impl ModelSource {
    pub fn modes(&self) -> usize {
        match self {
            ModelSource::Pyrazine { modes } => *modes,
            ModelSource::File { model } => model.modes.len(),
        }
    }
}

/// Per-mode simulator noise family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeNoise {
    Dephasing,
    Heating,
    Cooling,
}

impl ModeNoise {
    pub fn kind(self) -> fn(usize) -> ChannelKind {
        match self {
            ModeNoise::Dephasing => vibrational_dephasing,
            ModeNoise::Heating => vibrational_heating,
            ModeNoise::Cooling => |mode| ChannelKind::VibrationalCooling { mode },
        }
    }
}

/// Everything that fixes one case's numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub model: ModelSource,
    pub system: SystemKind,
    /// Fock cutoff applied to every mode.
    pub cutoff: usize,
    pub t_final_s: f64,
    pub samples: usize,
    pub scaling_f: f64,
    /// Molecular channels of the open system; `None` takes the source default
    /// (per-mode dephasing at the pyrazine environment rate, or the file's channels).
    pub usable_channels: Option<Vec<LindbladChannel>>,
    /// Simulator error family, applied to every mode at the swept rate.
    pub error_noise: ModeNoise,
    /// Electronic state whose population error is tracked.
    pub population_state: usize,
    pub tolerances: Tolerances,
    /// Largest norm a truncated coherent state may lose.
    pub truncation_loss_tol: f64,
}

impl CaseConfig {
    /// Pyrazine with `cutoff` levels per mode, 150 fs, 31 samples.
    pub fn pyrazine(system: SystemKind, cutoff: usize) -> Self {
        Self {
            model: ModelSource::Pyrazine { modes: 2 },
            system,
            cutoff,
            t_final_s: 150e-15,
            samples: 31,
            scaling_f: 1.4e-11,
            usable_channels: None,
            error_noise: match system {
                SystemKind::Isolated => ModeNoise::Dephasing,
                SystemKind::Open => ModeNoise::Heating,
            },
            population_state: PyrazineParams::BRIGHT,
            tolerances: Tolerances::reference(),
            truncation_loss_tol: crate::model::REDUCED_CUTOFF_LOSS_TOL,
        }
    }

    /// Replaces the pyrazine mode count; other sources are left alone.
    pub fn with_modes(mut self, modes: usize) -> Self {
        if let ModelSource::Pyrazine { .. } = self.model {
            self.model = ModelSource::Pyrazine { modes };
        }
        self
    }

    pub fn modes(&self) -> usize {
        self.model.modes()
    }
}

/// A built case with lazily computed reference data.
pub struct Case {
    cfg: CaseConfig,
    model: VCModel,
    cutoffs: Vec<usize>,
    grid: TimeGrid,
    psi0: StateVector,
    h_qubits: PauliSum,
    molecular: Vec<LindbladChannel>,
    propagator: OnceLock<UnitaryPropagator>,
    reference: OnceLock<Trajectory>,
    // Concurrent sweep points wait here instead of solving the reference twice.
    init: Mutex<()>,
}

impl Case {
    pub fn new(cfg: CaseConfig) -> Result<Self> {
        let (model, spec, file_channels) = match &cfg.model {
            ModelSource::Pyrazine { modes } => {
                let model = extend_pyrazine(*modes)?;
                let spec = pyrazine_initial_state(&model);
                let env = per_mode_channels(&model, PyrazineParams::GAMMA_D, vibrational_dephasing);
                (model, spec, env)
            }
            ModelSource::File { model: file } => (file.model()?, file.initial_state()?, file.channels()?),
        };
        let cutoffs = vec![cfg.cutoff; model.num_modes()];
        let grid = TimeGrid::new(cfg.t_final_s, cfg.samples)?;
        let psi0 = build_initial_state_with_loss(&spec, &model, &cutoffs, cfg.truncation_loss_tol)?;
        let h_qubits = encode_vc_model(&model, &cutoffs, Prune::default())?;
        let molecular = match cfg.system {
            SystemKind::Isolated => vec![],
            SystemKind::Open => cfg.usable_channels.clone().unwrap_or(file_channels),
        };
        for c in &molecular {
            c.validate(&model)?;
        }
        if cfg.system == SystemKind::Open && molecular.is_empty() {
            return Err(invalid("the open system needs at least one usable channel"));
        }
        if !(cfg.scaling_f > 0.0) {
            return Err(invalid("scaling factor F must be positive"));
        }
        if cfg.population_state >= model.electronic_states() {
            return Err(invalid(format!("population state {} out of range", cfg.population_state)));
        }
        Ok(Self {
            cfg,
            model,
            cutoffs,
            grid,
            psi0,
            h_qubits,
            molecular,
            propagator: OnceLock::new(),
            reference: OnceLock::new(),
            init: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &CaseConfig {
        &self.cfg
    }

    pub fn model(&self) -> &VCModel {
        &self.model
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi0
    }

    pub fn h_qubits(&self) -> &PauliSum {
        &self.h_qubits
    }

    pub fn qubit_layout(&self) -> &RegisterLayout {
        self.h_qubits.layout()
    }

    /// Molecular channels of the target dynamics; empty for the isolated system.
    pub fn molecular_channels(&self) -> &[LindbladChannel] {
        &self.molecular
    }

    pub fn mqb_cost(&self) -> MqbCost {
        mqb_cost(&self.model)
    }

    fn rho0(&self) -> DensityMatrix {
        self.psi0.to_density()
    }

    pub fn propagator(&self) -> Result<&UnitaryPropagator> {
        if let Some(p) = self.propagator.get() {
            return Ok(p);
        }
        let _guard = self.init.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = self.propagator.get() {
            return Ok(p);
        }
        let p = UnitaryPropagator::new(&self.model, &self.cutoffs)?;
        Ok(self.propagator.get_or_init(|| p))
    }

    /// Exact dynamics on the case grid, states kept, in the Fock basis.
    pub fn reference(&self) -> Result<&Trajectory> {
        if let Some(r) = self.reference.get() {
            return Ok(r);
        }
        if self.cfg.system == SystemKind::Isolated {
            self.propagator()?;
        }
        let _guard = self.init.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = self.reference.get() {
            return Ok(r);
        }
        let r = match self.cfg.system {
            SystemKind::Isolated => self.propagator.get().expect("built above").trajectory_at(&self.psi0, &self.grid.times(), true)?,
            SystemKind::Open => LindbladProblem::new(&self.model, &self.molecular, &self.cutoffs)?.solve(
                &self.rho0(),
                &self.grid.times(),
                self.cfg.tolerances,
                true,
            )?,
        };
        Ok(self.reference.get_or_init(|| r))
    }

    /// Simulator error channels at `gamma_err`, one per mode.
    pub fn error_channels(&self, gamma_err: f64) -> Vec<LindbladChannel> {
        per_mode_channels(&self.model, gamma_err, self.cfg.error_noise.kind())
    }

    pub fn noise_model(&self, gamma_err: f64) -> Result<MQBNoiseModel> {
        MQBNoiseModel::new(self.cfg.scaling_f, self.molecular.clone(), self.error_channels(gamma_err))
    }

    /// Errors of the emulated MQB simulation at simulator error rate `gamma_err`.
    pub fn mqb_errors(&self, gamma_err: f64) -> Result<RunErrors> {
        let reference = self.reference()?;
        let problem = emulate_mqb_problem(&self.model, &self.noise_model(gamma_err)?, &self.cutoffs)?;
        let mut tracker = ErrorTracker::new(reference, self.cfg.population_state)?;
        let electronic = self.model.electronic_states();
        problem.solve_observe(&self.rho0(), &self.grid.times(), self.cfg.tolerances, |i, t, rho| {
            let pops = crate::model::electronic_populations(&rho.diagonal(), electronic);
            tracker.observe(i, t, &SampleState::Mixed(rho), None, &pops)
        })?;
        tracker.finish()
    }

    /// MQB trajectory at `gamma_err`, populations only.
    pub fn mqb_trajectory(&self, gamma_err: f64) -> Result<Trajectory> {
        emulate_mqb_problem(&self.model, &self.noise_model(gamma_err)?, &self.cutoffs)?.solve(
            &self.rho0(),
            &self.grid.times(),
            self.cfg.tolerances,
            false,
        )
    }

    /// Qubit-only trajectory in the qubit basis, populations only.
    pub fn qubit_trajectory(&self, order: TrotterOrder, steps: usize) -> Result<Trajectory> {
        let layout = self.qubit_layout();
        match self.cfg.system {
            SystemKind::Isolated => {
                let plan = TrotterPlan::new(order, steps, self.cfg.t_final_s)?;
                simulate_trotter_with(&self.h_qubits, &plan, &embed_fock_state(&self.psi0, layout)?, &self.grid, false)
            }
            SystemKind::Open if order == TrotterOrder::First => {
                let rho0 = DensityMatrix::from_matrix_unchecked(embed_fock_matrix(self.rho0().matrix(), layout)?);
                simulate_open(&self.h_qubits, &self.dilation_plan(steps)?, &rho0, &self.grid, false)
            }
            SystemKind::Open => Err(invalid("the dilated open-system update is first order only")),
        }
    }

    /// Errors of `steps` Trotter steps (isolated) or dilated Lindblad steps (open).
    pub fn qubit_errors(&self, order: TrotterOrder, steps: usize) -> Result<RunErrors> {
        match self.cfg.system {
            SystemKind::Isolated => self.trotter_errors(order, steps),
            SystemKind::Open if order == TrotterOrder::First => self.open_errors(steps),
            SystemKind::Open => Err(invalid("the dilated open-system update is first order only")),
        }
    }

    fn trotter_errors(&self, order: TrotterOrder, steps: usize) -> Result<RunErrors> {
        let indices = self.grid.snap(steps)?;
        let times = step_times(self.cfg.t_final_s, steps, &indices);
        let k = self.cfg.samples - 1;
        let on_grid = indices.len() == self.cfg.samples && indices.iter().enumerate().all(|(i, &idx)| idx * k == i * steps);
        let local;
        let reference = if on_grid {
            self.reference()?
        } else {
            local = self.propagator()?.trajectory_at(&self.psi0, &times, true)?;
            &local
        };
        let layout = self.qubit_layout();
        let stepper = TrotterStepper::new(&self.h_qubits, self.cfg.t_final_s / steps as f64, order)?;
        let mut psi = embed_fock_state(&self.psi0, layout)?.into_amplitudes();
        let mut tracker = ErrorTracker::new(reference, self.cfg.population_state)?;
        let mut done = 0;
        for (k, (&idx, &t)) in indices.iter().zip(&times).enumerate() {
            while done < idx {
                stepper.apply(&mut psi)?;
                done += 1;
            }
            let state = StateVector::normalized(psi.clone())?;
            let pops = crate::dynamics::qubit_electronic_populations(&state.probabilities(), layout);
            tracker.observe(k, t, &SampleState::Pure(state), Some(layout), &pops)?;
        }
        tracker.finish()
    }

    /// Dilation plan with `steps` steps over the case time.
    pub fn dilation_plan(&self, steps: usize) -> Result<DilationPlan> {
        DilationPlan::from_channels(&self.molecular, &self.model, &self.cutoffs, self.cfg.t_final_s, steps)
    }

    fn open_errors(&self, steps: usize) -> Result<RunErrors> {
        let k = self.cfg.samples - 1;
        if steps % k != 0 {
            return Err(invalid(format!(
                "open-system step counts must be multiples of {k} so samples fall on the reference grid"
            )));
        }
        let reference = self.reference()?;
        let plan = self.dilation_plan(steps)?;
        let dilated = build_dilated_pauli_sum(&self.h_qubits, &plan)?;
        let step = DilatedStep::new(&dilated, &plan)?;
        let layout = self.qubit_layout();
        let mut rho = DensityMatrix::from_matrix_unchecked(embed_fock_matrix(self.rho0().matrix(), layout)?);
        let mut tracker = ErrorTracker::new(reference, self.cfg.population_state)?;
        let indices = self.grid.snap(steps)?;
        let times = step_times(self.cfg.t_final_s, steps, &indices);
        let mut done = 0;
        for (i, (&idx, &t)) in indices.iter().zip(&times).enumerate() {
            while done < idx {
                rho = step.apply(&rho)?;
                done += 1;
            }
            let pops = crate::dynamics::qubit_electronic_populations(&rho.diagonal(), layout);
            tracker.observe(i, t, &SampleState::Mixed(rho.clone()), Some(layout), &pops)?;
        }
        tracker.finish()
    }

    /// Per-step gate tallies of the qubit-only circuit at `steps` steps.
    ///
    /// The open-system sum depends on `dt` through its coefficients, so pruning can too.
    pub fn counts(&self, steps: usize) -> Result<ResourceCount> {
        match self.cfg.system {
            SystemKind::Isolated => Ok(count_resources(&self.h_qubits, 1, self.qubit_layout())),
            SystemKind::Open => {
                let plan = self.dilation_plan(steps)?;
                Ok(count_resources_open(&build_dilated_pauli_sum(&self.h_qubits, &plan)?, 1))
            }
        }
    }
}

/// One swept point with both metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub errors: RunErrors,
}

/// What a single swept point computes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunKind {
    Mqb { gamma_err_per_s: f64 },
    Qubit { order: u32, steps: usize },
}

/// Identifies a swept point; serialized, it is the cache key material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointKey {
    pub case: CaseConfig,
    pub run: RunKind,
}

pub type Producer<'a> = dyn Fn() -> Result<RunErrors> + Sync + 'a;

/// Lookup in front of every swept point.
pub trait PointStore: Sync {
    fn get_or_compute(&self, key: &PointKey, producer: &Producer<'_>) -> Result<RunErrors>;
}

/// Always computes.
pub struct NoStore;

impl PointStore for NoStore {
    fn get_or_compute(&self, _key: &PointKey, producer: &Producer<'_>) -> Result<RunErrors> {
        producer()
    }
}

/// MQB errors at each simulator rate, computed concurrently.
pub fn mqb_sweep(case: &Case, gammas: &[f64], store: &dyn PointStore) -> Result<Vec<SweepPoint>> {
    par_map(gammas, |&g| {
        let key = PointKey {
            case: case.config().clone(),
            run: RunKind::Mqb { gamma_err_per_s: g },
        };
        Ok(SweepPoint {
            x: g,
            errors: store.get_or_compute(&key, &|| case.mqb_errors(g))?,
        })
    })
    .into_iter()
    .collect()
}

/// Qubit-only errors at each step count, computed concurrently.
pub fn qubit_sweep(case: &Case, order: TrotterOrder, steps: &[usize], store: &dyn PointStore) -> Result<Vec<SweepPoint>> {
    par_map(steps, |&n| {
        let key = PointKey {
            case: case.config().clone(),
            run: RunKind::Qubit {
                order: order.as_int(),
                steps: n,
            },
        };
        Ok(SweepPoint {
            x: n as f64,
            errors: store.get_or_compute(&key, &|| case.qubit_errors(order, n))?,
        })
    })
    .into_iter()
    .collect()
}

pub fn curve_of(points: &[SweepPoint], abscissa: Abscissa, metric: Metric) -> Result<ErrorCurve> {
    ErrorCurve::from_points(abscissa, metric, points.iter().map(|p| (p.x, p.errors.get(metric))).collect())
}

/// `(K - 1) * 2^k` for `k` in `0..count`.
pub fn doubling_steps(samples: usize, count: u32) -> Vec<usize> {
    (0..count).map(|k| (samples - 1) << k).collect()
}

/// Asymptotic log-log slope of a qubit error curve.
///
/// A population is linear in the state error, so it falls as `N^-p`; infidelity is
/// quadratic in it for pure-state errors and falls as `N^-2p`.
pub fn expected_tail_slope(metric: Metric, order: TrotterOrder) -> f64 {
    let p = order.as_int() as f64;
    match metric {
        Metric::Infidelity => -2.0 * p,
        Metric::Population(_) => -p,
    }
}

/// A matched cell of the resource table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedCell {
    pub system: SystemKind,
    pub modes: usize,
    pub metric: Metric,
    pub matched: MatchResult,
    pub tail: Option<TailFit>,
    pub per_step: ResourceCount,
    pub report: VolumeReport,
}

/// Matches the MQB error at `gamma_err` against the qubit curve and prices the circuit.
pub fn match_cell(
    case: &Case,
    metric: Metric,
    order: TrotterOrder,
    gamma_err: f64,
    mqb_points: &[SweepPoint],
    qubit_points: &[SweepPoint],
) -> Result<MatchedCell> {
    let mqb = fit_interpolant(&curve_of(mqb_points, Abscissa::GammaErr, metric)?)?;
    let qubit = fit_and_extrapolate(
        &curve_of(qubit_points, Abscissa::TrotterSteps, metric)?,
        expected_tail_slope(metric, order),
    )?;
    let matched = match_curves(&mqb, &qubit, gamma_err)?;
    let steps = usize::try_from(matched.steps).map_err(|_| invalid("matched step count overflows"))?;
    let per_step = case.counts(steps)?;
    let report = compute_advantage(&matched, &per_step, &case.mqb_cost());
    Ok(MatchedCell {
        system: case.config().system,
        modes: case.config().modes(),
        metric,
        tail: qubit.tail().ok().copied(),
        matched,
        per_step,
        report,
    })
}

/// Settings for one system's column pair of the resource table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub case: CaseConfig,
    /// Rate at which the MQB error is matched.
    pub gamma_err_per_s: f64,
    /// Rates sampled for the MQB curve; must bracket the matched rate.
    pub mqb_gammas_per_s: Vec<f64>,
    pub order: TrotterOrder,
    pub steps: Vec<usize>,
}

/// Sampled curves of one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemCurves {
    pub system: SystemKind,
    pub modes: usize,
    pub order: TrotterOrder,
    pub mqb: Vec<SweepPoint>,
    pub qubit: Vec<SweepPoint>,
}

/// A cell, or why it could not be produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Matched(Box<MatchedCell>),
    Refused { system: SystemKind, modes: usize, metric: Metric, reason: String },
}

impl CellOutcome {
    pub fn matched(&self) -> Option<&MatchedCell> {
        match self {
            CellOutcome::Matched(c) => Some(c),
            CellOutcome::Refused { .. } => None,
        }
    }
}

fn cell_outcome(
    case: &Case,
    metric: Metric,
    spec: &ColumnSpec,
    curves: &SystemCurves,
) -> Result<CellOutcome> {
    match match_cell(case, metric, spec.order, spec.gamma_err_per_s, &curves.mqb, &curves.qubit) {
        Ok(c) => Ok(CellOutcome::Matched(Box::new(c))),
        Err(crate::error::Error::ExtrapolationRefused(reason)) => Ok(CellOutcome::Refused {
            system: case.config().system,
            modes: case.config().modes(),
            metric,
            reason,
        }),
        Err(e) => Err(e),
    }
}

/// Samples both curves of one system and matches every metric.
pub fn run_column(spec: &ColumnSpec, metrics: &[Metric], store: &dyn PointStore) -> Result<(SystemCurves, Vec<CellOutcome>)> {
    let case = Case::new(spec.case.clone())?;
    let curves = SystemCurves {
        system: spec.case.system,
        modes: spec.case.modes(),
        order: spec.order,
        mqb: mqb_sweep(&case, &spec.mqb_gammas_per_s, store)?,
        qubit: qubit_sweep(&case, spec.order, &spec.steps, store)?,
    };
    let cells = metrics
        .iter()
        .map(|&m| cell_outcome(&case, m, spec, &curves))
        .collect::<Result<Vec<_>>>()?;
    Ok((curves, cells))
}

/// Both systems, both metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceTable {
    pub curves: Vec<SystemCurves>,
    /// Ordered isolated ε_F, isolated ε_1, open ε_F, open ε_1.
    pub cells: Vec<CellOutcome>,
}

impl ResourceTable {
    pub fn cell(&self, system: SystemKind, metric: Metric) -> Option<&MatchedCell> {
        self.cells
            .iter()
            .filter_map(CellOutcome::matched)
            .find(|c| c.system == system && c.metric == metric)
    }
}

pub fn table_metrics(population_state: usize) -> [Metric; 2] {
    [Metric::Infidelity, Metric::Population(population_state)]
}

pub fn resource_table(isolated: &ColumnSpec, open: &ColumnSpec, store: &dyn PointStore) -> Result<ResourceTable> {
    if isolated.case.system != SystemKind::Isolated || open.case.system != SystemKind::Open {
        return Err(invalid("resource table needs one isolated and one open column"));
    }
    let mut curves = Vec::new();
    let mut cells = Vec::new();
    for spec in [isolated, open] {
        let (c, m) = run_column(spec, &table_metrics(spec.case.population_state), store)?;
        curves.push(c);
        cells.extend(m);
    }
    Ok(ResourceTable { curves, cells })
}

/// Settings of a mode-count sweep for one system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    /// Column settings at the base mode count; `modes` is replaced per row.
    pub column: ColumnSpec,
    pub modes: Vec<usize>,
    pub metric: Metric,
    /// Open rows whose system register exceeds this many qubits are skipped.
    pub open_max_system_qubits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub modes: usize,
    pub qubits: usize,
    pub curves: Option<SystemCurves>,
    pub outcome: Option<CellOutcome>,
    /// Why the row was not run.
    pub skipped: Option<String>,
}

impl ScalingRow {
    /// The MQB error at the matched rate, when sampled there.
    pub fn mqb_error(&self, gamma_err: f64, metric: Metric) -> Option<f64> {
        self.curves
            .as_ref()?
            .mqb
            .iter()
            .find(|p| p.x == gamma_err)
            .map(|p| p.errors.get(metric))
    }

    pub fn advantage(&self) -> Option<f64> {
        Some(self.outcome.as_ref()?.matched()?.report.advantage)
    }
}

/// MQB error, matched N and advantage for each mode count.
pub fn scaling_sweep(spec: &ScalingSpec, store: &dyn PointStore) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &m in &spec.modes {
        if m < 2 {
            return Err(invalid("scaling needs at least two modes"));
        }
        let mut column = spec.column.clone();
        if !matches!(column.case.model, ModelSource::Pyrazine { .. }) {
            return Err(invalid("mode scaling is defined for the extended pyrazine model only"));
        }
        column.case = column.case.with_modes(m);
        let qubits = RegisterLayout::vibronic(2, &vec![column.case.cutoff; m])?.total_qubits();
        if column.case.system == SystemKind::Open && qubits > spec.open_max_system_qubits {
            rows.push(ScalingRow {
                modes: m,
                qubits,
                curves: None,
                outcome: None,
                skipped: Some(format!(
                    "open system with {qubits} system qubits exceeds the configured limit of {}",
                    spec.open_max_system_qubits
                )),
            });
            continue;
        }
        log::info!("scaling {} M={m}", column.case.system.name());
        let (curves, mut cells) = run_column(&column, &[spec.metric], store)?;
        rows.push(ScalingRow {
            modes: m,
            qubits,
            curves: Some(curves),
            outcome: cells.pop(),
            skipped: None,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(system: SystemKind) -> Case {
        let mut cfg = CaseConfig::pyrazine(system, 4);
        cfg.samples = 6;
        Case::new(cfg).unwrap()
    }

    #[test]
    fn zero_noise_mqb_is_exact() {
        let case = small(SystemKind::Isolated);
        let e = case.mqb_errors(0.0).unwrap();
        assert!(e.infidelity < 1e-7 && e.population < 1e-7, "{e:?}");
        let open = small(SystemKind::Open);
        let e = open.mqb_errors(0.0).unwrap();
        assert!(e.infidelity < 1e-7 && e.population < 1e-7, "{e:?}");
    }

    #[test]
    fn mqb_error_grows_with_rate() {
        let case = small(SystemKind::Isolated);
        let pts = mqb_sweep(&case, &[1.0, 10.0, 100.0], &NoStore).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].errors.infidelity > w[0].errors.infidelity);
        }
    }

    #[test]
    fn trotter_errors_shrink_and_snap() {
        let case = small(SystemKind::Isolated);
        let pts = qubit_sweep(&case, TrotterOrder::First, &[1000, 2000, 4000], &NoStore).unwrap();
        assert!(pts[1].errors.infidelity < pts[0].errors.infidelity);
        assert!(pts[2].errors.infidelity < pts[1].errors.infidelity);
        // Off-grid step counts are compared against references at the snapped times.
        case.qubit_errors(TrotterOrder::First, 333).unwrap();
    }

    #[test]
    fn open_steps_must_land_on_the_grid() {
        let case = small(SystemKind::Open);
        assert!(case.qubit_errors(TrotterOrder::First, 7).is_err());
        assert!(case.qubit_errors(TrotterOrder::Second, 10).is_err());
        let a = case.qubit_errors(TrotterOrder::First, 200).unwrap();
        let b = case.qubit_errors(TrotterOrder::First, 400).unwrap();
        assert!(b.population < a.population);
    }

    #[test]
    fn open_counts_exceed_closed() {
        let case = small(SystemKind::Open);
        let iso = small(SystemKind::Isolated);
        let o = case.counts(100).unwrap();
        let c = iso.counts(100).unwrap();
        assert!(o.rz_per_step > c.rz_per_step && o.cnot_opt_per_step > c.cnot_opt_per_step);
        assert_eq!(o.qubits, c.qubits + 2);
    }
}
