//! Subcommands and the artifacts they write.

use std::path::{Path, PathBuf};

use mqb_core::comparison::{
    fit_and_extrapolate, fit_interpolant, match_curves, Abscissa, ErrorCurve, MatchResult, Metric, Provenance, TailFit,
};
use mqb_core::dynamics::Trajectory;
use mqb_core::pipeline::{
    expected_tail_slope, mqb_sweep, qubit_sweep, resource_table, run_column, scaling_sweep, Case, CaseConfig, CellOutcome,
    MatchedCell, ResourceTable, ScalingRow, SweepPoint, SystemCurves, SystemKind,
};
use mqb_core::sweep::{par_map, with_workers};
use mqb_core::trotter::TrotterOrder;
use mqb_core::CODE_VERSION;
use serde::Serialize;
use serde_json::json;

use crate::cache::{write_atomic, ResultCache};
use crate::config::{ConfigError, ExperimentConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Encode,
    SimulateExact,
    SimulateMqb,
    SimulateTrotter,
    SimulateOpen,
    /// Matches configured sweeps, or two curve files when both are given.
    Match {
        mqb_curve: Option<PathBuf>,
        qubit_curve: Option<PathBuf>,
    },
    ReportTable,
    Scaling,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Encode => "encode",
            Command::SimulateExact => "simulate-exact",
            Command::SimulateMqb => "simulate-mqb",
            Command::SimulateTrotter => "simulate-trotter",
            Command::SimulateOpen => "simulate-open",
            Command::Match { .. } => "match",
            Command::ReportTable => "report-table",
            Command::Scaling => "scaling",
        }
    }
}

pub struct RunContext {
    pub out: PathBuf,
    pub cache: ResultCache,
    /// Sweep threads; `0` keeps the default pool.
    pub workers: usize,
    /// System for the commands that run one.
    pub system: SystemKind,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// Artifacts were written, but some cells need an unverified extrapolation.
    Refused(Vec<String>),
    Failed(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Refused(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "invalid configuration: {e}"),
            CliError::Refused(r) => write!(f, "extrapolation refused: {}", r.join("; ")),
            CliError::Failed(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<mqb_core::Error> for CliError {
    fn from(e: mqb_core::Error) -> Self {
        match e {
            mqb_core::Error::InvalidArgument(msg) => CliError::Config(ConfigError {
                field: String::new(),
                message: msg,
            }),
            other => CliError::Failed(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.into())
    }
}

/// Files written by a run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.into()))?;
        text.push('\n');
        self.write(dir, name, text.as_bytes())
    }

    fn csv(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Failed(e.into()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Failed(e.into()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Failed(anyhow::anyhow!("{e}")))?;
        self.write(dir, name, &bytes)
    }

    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.push(path);
        Ok(())
    }
}

/// Integers print plainly, everything else in shortest round-trip exponent form.
fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{x:e}")
    }
}

fn prov(p: Provenance) -> String {
    serde_json::to_value(p).expect("enum serializes").as_str().expect("string tag").to_string()
}

pub fn run(cmd: &Command, cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&ctx.out)?;
    with_workers(ctx.workers, || match cmd {
        Command::Encode => encode(cfg, ctx),
        Command::SimulateExact => simulate_exact(cfg, ctx),
        Command::SimulateMqb => simulate_mqb(cfg, ctx),
        Command::SimulateTrotter => simulate_qubit(cfg, ctx, SystemKind::Isolated),
        Command::SimulateOpen => simulate_qubit(cfg, ctx, SystemKind::Open),
        Command::Match { mqb_curve, qubit_curve } => match (mqb_curve, qubit_curve) {
            (Some(m), Some(q)) => match_files(cfg, ctx, m, q),
            (None, None) => match_sweeps(cfg, ctx),
            _ => Err(CliError::Config(ConfigError {
                field: "--mqb-curve/--qubit-curve".into(),
                message: "give both curve files or neither".into(),
            })),
        },
        Command::ReportTable => report_table(cfg, ctx),
        Command::Scaling => scaling(cfg, ctx),
    })
}

fn encode(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let spec = cfg.column_spec(ctx.system)?;
    let case = Case::new(spec.case.clone())?;
    let steps = spec.steps[0];
    let per_step = case.counts(steps)?;
    let closed = mqb_core::trotter::count_resources(case.h_qubits(), 1, case.qubit_layout());
    let mut value = serde_json::to_value(&per_step).map_err(|e| CliError::Failed(e.into()))?;
    let obj = value.as_object_mut().expect("struct serializes to an object");
    obj.insert("code_version".into(), json!(CODE_VERSION));
    obj.insert("system".into(), json!(ctx.system));
    obj.insert("cutoff".into(), json!(spec.case.cutoff));
    obj.insert("modes".into(), json!(spec.case.modes()));
    obj.insert("pauli_terms".into(), json!(case.h_qubits().len()));
    obj.insert("pauli_sum".into(), case.h_qubits().to_json());
    if ctx.system == SystemKind::Open {
        obj.insert("counted_at_N".into(), json!(steps));
        obj.insert("closed".into(), serde_json::to_value(&closed).expect("serializes"));
    }
    obj.insert("provenance".into(), json!("simulated"));
    let mut out = Outcome::default();
    out.json(&ctx.out, &format!("encode_{}.json", ctx.system.name()), &value)?;
    Ok(out)
}

fn trajectory_csv(t: &Trajectory) -> mqb_core::Result<String> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
struct TrajectoryKey {
    record: String,
    case: CaseConfig,
    gamma_err_per_s: Option<f64>,
    order: Option<u32>,
    steps: Option<usize>,
}

impl TrajectoryKey {
    fn new(record: &str, case: &CaseConfig) -> Self {
        Self {
            record: record.into(),
            case: case.clone(),
            gamma_err_per_s: None,
            order: None,
            steps: None,
        }
    }
}

fn simulate_exact(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let case_cfg = cfg.case_config(ctx.system)?;
    let case = Case::new(case_cfg.clone())?;
    let text = ctx
        .cache
        .get_or_compute(&TrajectoryKey::new("exact_csv", &case_cfg), || trajectory_csv(case.reference()?))?;
    let mut out = Outcome::default();
    out.write(&ctx.out, &format!("exact_{}.csv", ctx.system.name()), text.as_bytes())?;
    Ok(out)
}

fn error_rows(system: SystemKind, metric_n: usize, label: &[String], points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            let mut r = vec![system.name().to_string()];
            r.extend(label.iter().cloned());
            r.extend([
                num(p.x),
                num(p.errors.infidelity),
                num(p.errors.population),
                prov(Provenance::Simulated),
            ]);
            let _ = metric_n;
            r
        })
        .collect()
}

fn simulate_mqb(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let spec = cfg.column_spec(ctx.system)?;
    let case = Case::new(spec.case.clone())?;
    let name = ctx.system.name();
    let mut out = Outcome::default();
    let texts = par_map(&spec.mqb_gammas_per_s, |&g| {
        let mut key = TrajectoryKey::new("mqb_csv", &spec.case);
        key.gamma_err_per_s = Some(g);
        ctx.cache.get_or_compute(&key, || trajectory_csv(&case.mqb_trajectory(g)?))
    });
    for (g, text) in spec.mqb_gammas_per_s.iter().zip(texts) {
        out.write(&ctx.out, &format!("mqb_{name}_gamma_{}.csv", num(*g)), text?.as_bytes())?;
    }
    let points = mqb_sweep(&case, &spec.mqb_gammas_per_s, &ctx.cache)?;
    let n = spec.case.population_state;
    let eps_n = format!("eps_{n}");
    out.csv(
        &ctx.out,
        &format!("mqb_{name}_errors.csv"),
        &["system", "gamma_err_per_s", "eps_F", &eps_n, "provenance"],
        &error_rows(ctx.system, n, &[], &points),
    )?;
    Ok(out)
}

fn simulate_qubit(cfg: &ExperimentConfig, ctx: &RunContext, system: SystemKind) -> Result<Outcome, CliError> {
    let spec = cfg.column_spec(system)?;
    let case = Case::new(spec.case.clone())?;
    let name = system.name();
    let n = spec.case.population_state;
    let eps_n = format!("eps_{n}");
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for order in cfg.orders(system) {
        let texts = par_map(&spec.steps, |&steps| {
            let mut key = TrajectoryKey::new("qubit_csv", &spec.case);
            key.order = Some(order.as_int());
            key.steps = Some(steps);
            ctx.cache
                .get_or_compute(&key, || trajectory_csv(&case.qubit_trajectory(order, steps)?))
        });
        for (steps, text) in spec.steps.iter().zip(texts) {
            out.write(
                &ctx.out,
                &format!("qubit_{name}_order{}_N{steps}.csv", order.as_int()),
                text?.as_bytes(),
            )?;
        }
        let points = qubit_sweep(&case, order, &spec.steps, &ctx.cache)?;
        rows.extend(error_rows(system, n, &[order.as_int().to_string()], &points));
    }
    out.csv(
        &ctx.out,
        &format!("qubit_{name}_errors.csv"),
        &["system", "order", "N", "eps_F", &eps_n, "provenance"],
        &rows,
    )?;
    Ok(out)
}

/// Two numeric columns `x, eps`; a header row is skipped.
pub fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Config(ConfigError {
            field: path.display().to_string(),
            message: e.to_string(),
        }))?;
    let mut points = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Failed(e.into()))?;
        let parsed: Option<(f64, f64)> = (|| Some((rec.get(0)?.trim().parse().ok()?, rec.get(1)?.trim().parse().ok()?)))();
        match parsed {
            Some(p) => points.push(p),
            None if line == 0 => continue,
            None => {
                return Err(CliError::Config(ConfigError {
                    field: format!("{}:{}", path.display(), line + 1),
                    message: "expected two numbers".into(),
                }))
            }
        }
    }
    Ok(points)
}

#[derive(Serialize)]
struct FileMatch {
    metric: Metric,
    matched: MatchResult,
    tail: Option<TailFit>,
    provenance: Provenance,
}

fn match_files(cfg: &ExperimentConfig, ctx: &RunContext, mqb: &Path, qubit: &Path) -> Result<Outcome, CliError> {
    let metric = cfg.scaling_metric();
    let system = ctx.system;
    let spec = cfg.column_spec(system)?;
    let bad = |e: mqb_core::Error| {
        CliError::Config(ConfigError {
            field: "curve".into(),
            message: e.to_string(),
        })
    };
    let mqb_curve = ErrorCurve::from_points(Abscissa::GammaErr, metric, read_curve(mqb)?).map_err(bad)?;
    let qubit_curve = ErrorCurve::from_points(Abscissa::TrotterSteps, metric, read_curve(qubit)?).map_err(bad)?;
    let mqb_fit = fit_interpolant(&mqb_curve)?;
    let qubit_fit = fit_and_extrapolate(&qubit_curve, expected_tail_slope(metric, spec.order))?;
    let matched = match match_curves(&mqb_fit, &qubit_fit, spec.gamma_err_per_s) {
        Ok(m) => m,
        Err(mqb_core::Error::ExtrapolationRefused(r)) => return Err(CliError::Refused(vec![r])),
        Err(e) => return Err(e.into()),
    };
    let provenance = if matched.extrapolated {
        Provenance::Extrapolated
    } else {
        Provenance::Interpolated
    };
    let record = FileMatch {
        metric,
        tail: qubit_fit.tail().ok().copied(),
        matched,
        provenance,
    };
    let mut out = Outcome::default();
    out.json(&ctx.out, &format!("match_{}.json", system.name()), &json!({
        "code_version": CODE_VERSION,
        "system": system,
        "match": record,
    }))?;
    Ok(out)
}

fn refusals(cells: &[CellOutcome]) -> Vec<String> {
    cells
        .iter()
        .filter_map(|c| match c {
            CellOutcome::Refused { system, modes, metric, reason } => {
                Some(format!("{} M={modes} {}: {reason}", system.name(), metric.tag()))
            }
            CellOutcome::Matched(_) => None,
        })
        .collect()
}

fn finish(out: Outcome, refused: Vec<String>) -> Result<Outcome, CliError> {
    if refused.is_empty() {
        Ok(out)
    } else {
        for r in &refused {
            log::warn!("{r}");
        }
        Err(CliError::Refused(refused))
    }
}

fn match_sweeps(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let spec = cfg.column_spec(ctx.system)?;
    let metrics = mqb_core::pipeline::table_metrics(spec.case.population_state);
    let (curves, cells) = run_column(&spec, &metrics, &ctx.cache)?;
    let mut out = Outcome::default();
    out.json(&ctx.out, &format!("match_{}.json", ctx.system.name()), &json!({
        "code_version": CODE_VERSION,
        "system": ctx.system,
        "cells": cells,
        "curves": curves,
    }))?;
    let refused = refusals(&cells);
    finish(out, refused)
}

fn cell_rows(cells: &[CellOutcome]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|c| match c {
            CellOutcome::Matched(m) => cell_row(m),
            CellOutcome::Refused { system, modes, metric, reason } => vec![
                system.name().into(),
                modes.to_string(),
                metric.tag(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("refused: {reason}"),
            ],
        })
        .collect()
}

fn cell_row(m: &MatchedCell) -> Vec<String> {
    let r = &m.report;
    vec![
        m.system.name().into(),
        m.modes.to_string(),
        m.metric.tag(),
        num(m.matched.gamma_err),
        num(m.matched.epsilon),
        m.matched.steps.to_string(),
        m.matched.extrapolated.to_string(),
        r.qubit_memory.to_string(),
        r.cnot_opt_total.to_string(),
        num(r.qecv),
        r.mqb_volume.to_string(),
        num(r.advantage),
        prov(r.provenance),
    ]
}

const CELL_HEADER: [&str; 13] = [
    "system",
    "modes",
    "metric",
    "gamma_err_per_s",
    "epsilon",
    "N",
    "extrapolated",
    "qubit_memory",
    "cnot_opt_total",
    "qecv",
    "mqb_volume",
    "advantage",
    "provenance",
];

/// Long-form curve rows; matched points are appended with their provenance.
fn curve_rows(curves: &[SystemCurves], cells: &[CellOutcome]) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let mut mqb = Vec::new();
    let mut qubit = Vec::new();
    for c in curves {
        let sys = c.system.name().to_string();
        let metrics: Vec<Metric> = cells
            .iter()
            .filter_map(|cell| match cell {
                CellOutcome::Matched(m) if m.system == c.system && m.modes == c.modes => Some(m.metric),
                CellOutcome::Refused { system, modes, metric, .. } if *system == c.system && *modes == c.modes => {
                    Some(*metric)
                }
                _ => None,
            })
            .collect();
        for &metric in &metrics {
            for p in &c.mqb {
                mqb.push(vec![
                    sys.clone(),
                    c.modes.to_string(),
                    metric.tag(),
                    num(p.x),
                    num(p.errors.get(metric)),
                    prov(Provenance::Simulated),
                ]);
            }
            for p in &c.qubit {
                qubit.push(vec![
                    sys.clone(),
                    c.modes.to_string(),
                    c.order.as_int().to_string(),
                    metric.tag(),
                    num(p.x),
                    num(p.errors.get(metric)),
                    prov(Provenance::Simulated),
                ]);
            }
            let matched = cells
                .iter()
                .filter_map(CellOutcome::matched)
                .find(|m| m.system == c.system && m.modes == c.modes && m.metric == metric);
            if let Some(m) = matched {
                let at_knot = c.qubit.iter().any(|p| p.x == m.matched.n_real);
                if !at_knot {
                    qubit.push(vec![
                        sys.clone(),
                        c.modes.to_string(),
                        c.order.as_int().to_string(),
                        metric.tag(),
                        num(m.matched.n_real),
                        num(m.matched.epsilon),
                        prov(if m.matched.extrapolated {
                            Provenance::Extrapolated
                        } else {
                            Provenance::Interpolated
                        }),
                    ]);
                }
            }
        }
    }
    (mqb, qubit)
}

fn report_table(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let iso = cfg.column_spec(SystemKind::Isolated)?;
    let open = cfg.column_spec(SystemKind::Open)?;
    let table: ResourceTable = resource_table(&iso, &open, &ctx.cache)?;
    let mut out = Outcome::default();
    out.json(&ctx.out, "table.json", &json!({
        "code_version": CODE_VERSION,
        "cells": table.cells,
        "curves": table.curves,
    }))?;
    out.csv(&ctx.out, "table.csv", &CELL_HEADER, &cell_rows(&table.cells))?;
    let (mqb_rows, qubit_rows) = curve_rows(&table.curves, &table.cells);
    out.csv(
        &ctx.out,
        "fig_mqb_curves.csv",
        &["system", "modes", "metric", "gamma_err_per_s", "eps", "provenance"],
        &mqb_rows,
    )?;
    out.csv(
        &ctx.out,
        "fig_qubit_curves.csv",
        &["system", "modes", "order", "metric", "N", "eps", "provenance"],
        &qubit_rows,
    )?;
    let refused = refusals(&table.cells);
    finish(out, refused)
}

#[derive(Serialize)]
struct ScalingSystem {
    system: SystemKind,
    metric: Metric,
    gamma_err_per_s: f64,
    order: TrotterOrder,
    rows: Vec<ScalingRow>,
}

fn scaling(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let metric = cfg.scaling_metric();
    let mut systems = Vec::new();
    for &system in &cfg.scaling.systems {
        let spec = cfg.scaling_spec(system)?;
        let rows = scaling_sweep(&spec, &ctx.cache)?;
        systems.push(ScalingSystem {
            system,
            metric,
            gamma_err_per_s: spec.column.gamma_err_per_s,
            order: spec.column.order,
            rows,
        });
    }
    let mut rows = Vec::new();
    let mut fig = Vec::new();
    let mut refused = Vec::new();
    for s in &systems {
        for r in &s.rows {
            let eps = r.mqb_error(s.gamma_err_per_s, metric).map(num).unwrap_or_default();
            let (n, a, p, status) = match (&r.outcome, &r.skipped) {
                (Some(CellOutcome::Matched(m)), _) => (
                    m.matched.steps.to_string(),
                    num(m.report.advantage),
                    prov(m.report.provenance),
                    "matched".to_string(),
                ),
                (Some(CellOutcome::Refused { reason, .. }), _) => {
                    refused.push(format!("{} M={}: {reason}", s.system.name(), r.modes));
                    (String::new(), String::new(), String::new(), format!("refused: {reason}"))
                }
                (None, Some(why)) => (String::new(), String::new(), String::new(), format!("skipped: {why}")),
                (None, None) => (String::new(), String::new(), String::new(), "missing".into()),
            };
            if !a.is_empty() {
                fig.push(vec![s.system.name().into(), r.modes.to_string(), a.clone(), p.clone()]);
            }
            rows.push(vec![
                s.system.name().into(),
                r.modes.to_string(),
                r.qubits.to_string(),
                metric.tag(),
                eps,
                n,
                a,
                p,
                status,
            ]);
        }
    }
    let mut out = Outcome::default();
    out.json(&ctx.out, "scaling.json", &json!({
        "code_version": CODE_VERSION,
        "systems": systems,
    }))?;
    out.csv(
        &ctx.out,
        "scaling.csv",
        &["system", "modes", "qubits", "metric", "mqb_error", "N", "advantage", "provenance", "status"],
        &rows,
    )?;
    out.csv(&ctx.out, "fig_advantage.csv", &["system", "modes", "advantage", "provenance"], &fig)?;
    finish(out, refused)
}
