//! Executes a loaded scenario and writes report.json, decay.csv and
//! manifest.json into its output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cosdyn::adjoint::check_adjoint_bounds;
use cosdyn::criteria::{check_all, Budget, CriterionReport, Verdict};
use cosdyn::dynamics::{MapSpec, OrbitProducts, WeightSpec};
use cosdyn::witnesses::{
    build_periodic_point, build_transitivity_witness, choose_truncation, orbit_trace, periodicity_residual,
    transition_distance_bound, verify_transition, Construction, TraceRow, DEFAULT_TAIL_FRACTION,
};
use cosdyn::{aperiodicity_horizon, norm, CompactSet, GridFunction, Horizon, NumericMode, Scalar, SpaceNorm};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, Scenario};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug)]
pub enum RunError {
    /// Bad parameters discovered while running (exit 2).
    Parameter(String),
    /// Output could not be written (exit 2).
    Io(PathBuf, std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Parameter(m) => write!(f, "{m}"),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<cosdyn::Error> for RunError {
    fn from(e: cosdyn::Error) -> Self {
        RunError::Parameter(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    /// Every criterion check ran out of budget without a verdict.
    Inconclusive,
    /// A construction was refused (its series do not decay).
    Refused,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Completed => 0,
            Status::Inconclusive | Status::Refused => 3,
        }
    }
}

#[derive(Serialize)]
struct TransitionSummary {
    n: u64,
    e: CompactSet,
    f_set: CompactSet,
    d: CompactSet,
    dist_to_f: Scalar,
    dist_image_to_g: Scalar,
    distance_bound: f64,
    v_support_size: usize,
    trace: Vec<TraceRow>,
}

#[derive(Serialize)]
struct PeriodicSummary {
    n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    residuals: Vec<LagResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refused: Option<String>,
}

#[derive(Serialize)]
struct LagResidual {
    l: u64,
    residual: Scalar,
    edge_bound: f64,
}

#[derive(Serialize)]
struct SweepCell {
    cell: String,
    params: Vec<(String, String)>,
    status: Status,
    verdicts: Vec<(String, Verdict)>,
}

#[derive(Serialize)]
struct Report {
    schema_version: &'static str,
    command: Command,
    mode: NumericMode,
    space: SpaceNorm,
    map: MapSpec,
    weight: WeightSpec,
    k: CompactSet,
    budget: Budget,
    horizon: Option<Horizon>,
    status: Status,
    reports: Vec<CriterionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transition: Option<TransitionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    periodic: Option<PeriodicSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<SweepCell>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_path: String,
    config: &'a str,
    effective: Effective<'a>,
    started_unix_seconds: u64,
    files: Vec<&'static str>,
}

#[derive(Serialize)]
struct Effective<'a> {
    command: Command,
    mode: NumericMode,
    output_dir: String,
    budget: &'a Budget,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|e| RunError::Io(path.to_path_buf(), e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("reports are serializable");
    text.push('\n');
    text.into_bytes()
}

/// Runs the scenario and writes all outputs; returns the run status.
pub fn run(scenario: &Scenario, config_text: &str) -> Result<Status, RunError> {
    let dir = &scenario.output_dir;
    fs::create_dir_all(dir).map_err(|e| RunError::Io(dir.clone(), e))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let (status, files) = if scenario.command == Command::Sweep {
        (run_sweep(scenario)?, vec!["report.json", "summary.csv", "cells/"])
    } else {
        (run_single(scenario, dir)?, vec!["report.json", "decay.csv"])
    };
    let manifest = Manifest {
        tool: "cosdyn",
        version: env!("CARGO_PKG_VERSION"),
        config_path: scenario.source_path.display().to_string(),
        config: config_text,
        effective: Effective {
            command: scenario.command,
            mode: scenario.mode,
            output_dir: dir.display().to_string(),
            budget: &scenario.budget,
        },
        started_unix_seconds: started,
        files,
    };
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    Ok(status)
}

fn base_report(scenario: &Scenario) -> Result<Report, RunError> {
    let horizon = match aperiodicity_horizon(&scenario.map(), &scenario.k, scenario.budget.max_n) {
        Ok(h) => Some(h),
        Err(cosdyn::Error::NotAperiodic(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: scenario.command,
        mode: scenario.mode,
        space: scenario.space,
        map: scenario.map_spec.clone(),
        weight: scenario.weight_spec.clone(),
        k: scenario.k.clone(),
        budget: scenario.budget,
        horizon,
        status: Status::Completed,
        reports: Vec::new(),
        transition: None,
        periodic: None,
        cells: None,
    })
}

fn run_single(scenario: &Scenario, dir: &Path) -> Result<Status, RunError> {
    let mut report = base_report(scenario)?;
    match scenario.command {
        Command::Check => {
            report.reports = criterion_reports(scenario)?;
            if report.reports.iter().all(CriterionReport::is_inconclusive) {
                report.status = Status::Inconclusive;
            }
        }
        Command::WitnessDemo => report.transition = Some(transition_demo(scenario)?),
        Command::PeriodicDemo => {
            let summary = periodic_demo(scenario)?;
            if summary.refused.is_some() {
                report.status = Status::Refused;
            }
            report.periodic = Some(summary);
        }
        Command::NormDecay => {}
        Command::Sweep => unreachable!("sweeps are dispatched separately"),
    }
    write_file(&dir.join("decay.csv"), &decay_csv(scenario)?)?;
    write_file(&dir.join("report.json"), &to_json(&report))?;
    Ok(report.status)
}

fn criterion_reports(scenario: &Scenario) -> Result<Vec<CriterionReport>, RunError> {
    let op = scenario.operator();
    let mut reports = check_all(&scenario.space, &op, &scenario.k, &scenario.budget)?;
    reports.push(check_adjoint_bounds(&op));
    Ok(reports)
}

fn transition_demo(scenario: &Scenario) -> Result<TransitionSummary, RunError> {
    let spec = scenario
        .witness
        .as_ref()
        .ok_or_else(|| RunError::Parameter("witness-demo needs a [witness] table".into()))?;
    if spec.n == 0 {
        return Err(RunError::Parameter("[witness]: n must be positive".into()));
    }
    let op = scenario.operator();
    let f = spec.f.build(&scenario.k, scenario.mode).map_err(|e| RunError::Parameter(format!("[witness] f: {e}")))?;
    let g = spec.g.build(&scenario.k, scenario.mode).map_err(|e| RunError::Parameter(format!("[witness] g: {e}")))?;
    let d = scenario.k.clone();
    // E gets the sites whose backward 2n-product is the smaller of the two
    let mut orbit = OrbitProducts::new(&d);
    orbit.advance_to(&op, 2 * spec.n);
    let sites = orbit.sites().to_vec();
    let in_e: Vec<_> = (0..sites.len()).filter(|&i| orbit.backward()[i] <= orbit.forward()[i].recip()).map(|i| sites[i]).collect();
    let e = CompactSet::from_sites(d.dim(), in_e)?;
    let f_set = d.difference(&e);
    let bundle = build_transitivity_witness(&op, &f, &g, spec.n, &e, &f_set, &d)?;
    let (dist_to_f, dist_image_to_g) = verify_transition(&scenario.space, &op, &bundle, &f, &g)?;
    let distance_bound = transition_distance_bound(&scenario.space, &op, &bundle, &f, &g, &scenario.k)?;
    let n_list: Vec<i64> = match &spec.trace_n {
        Some(list) => list.clone(),
        None => (0..=2 * spec.n as i64).collect(),
    };
    let trace = orbit_trace(&scenario.space, &op, &bundle.v, &[f, g], &n_list)?;
    Ok(TransitionSummary {
        n: spec.n,
        e,
        f_set,
        d,
        dist_to_f,
        dist_image_to_g,
        distance_bound,
        v_support_size: bundle.v.len(),
        trace,
    })
}

fn periodic_demo(scenario: &Scenario) -> Result<PeriodicSummary, RunError> {
    let spec = scenario
        .periodic
        .as_ref()
        .ok_or_else(|| RunError::Parameter("periodic-demo needs a [periodic] table".into()))?;
    if spec.n == 0 {
        return Err(RunError::Parameter("[periodic]: n must be positive".into()));
    }
    let op = scenario.operator();
    let f = spec.f.build(&scenario.k, scenario.mode).map_err(|e| RunError::Parameter(format!("[periodic] f: {e}")))?;
    let d = scenario.k.clone();
    let refused = |msg: String| PeriodicSummary {
        n: spec.n,
        truncation: None,
        tail_bound: None,
        ratio: None,
        residuals: Vec::new(),
        refused: Some(msg),
    };
    let truncation = match spec.truncation {
        Some(l) => l,
        None => match choose_truncation(&scenario.space, &op, &f, &d, spec.n, DEFAULT_TAIL_FRACTION, scenario.budget.l_max) {
            Ok(l) => l,
            Err(cosdyn::Error::NotCertifiable(m)) => return Ok(refused(m)),
            Err(e) => return Err(e.into()),
        },
    };
    let bundle = match build_periodic_point(&scenario.space, &op, &f, &d, spec.n, truncation) {
        Ok(b) => b,
        Err(cosdyn::Error::NotCertifiable(m)) => return Ok(refused(m)),
        Err(e) => return Err(e.into()),
    };
    let Construction::Periodic { tail_bound, ratio, .. } = bundle.construction else {
        unreachable!("periodic construction")
    };
    let residuals = (1..=spec.lags)
        .map(|l| {
            Ok(LagResidual {
                l,
                residual: periodicity_residual(&scenario.space, &op, &bundle, l)?,
                edge_bound: bundle.edge_bound(l).expect("periodic construction"),
            })
        })
        .collect::<Result<Vec<_>, cosdyn::Error>>()?;
    Ok(PeriodicSummary { n: spec.n, truncation: Some(truncation), tail_bound: Some(tail_bound), ratio: Some(ratio), residuals, refused: None })
}

fn decimal(v: &Scalar) -> String {
    format!("{:.16e}", v.to_f64())
}

/// Rows `n = 1..=n_max` of the product norms over `K` and the partial sums
/// of both series over `series_terms` terms.
pub fn decay_csv(scenario: &Scenario) -> Result<Vec<u8>, RunError> {
    let op = scenario.operator();
    let space = &scenario.space;
    let k = &scenario.k;
    let mode = op.mode();
    let exact_columns = scenario.mode == NumericMode::Exact;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n", "backward_product_norm", "inverse_forward_product_norm", "series_S_partial", "series_T_partial"];
    if exact_columns {
        header.extend(["backward_product_norm_exact", "inverse_forward_product_norm_exact", "series_S_partial_exact", "series_T_partial_exact"]);
    }
    writer.write_record(&header).map_err(csv_error)?;
    let mut orbit = OrbitProducts::new(k);
    let sites = orbit.sites().to_vec();
    let restricted = |values: Vec<Scalar>| {
        GridFunction::from_entries(k.dim(), mode, sites.iter().copied().zip(values)).expect("sites of K")
    };
    for n in 1..=scenario.scan.n_max {
        orbit.advance_to(&op, n);
        let backward = norm(space, &restricted(orbit.backward().to_vec()))?;
        let forward_inv = norm(space, &restricted(orbit.forward().iter().map(Scalar::recip).collect()))?;
        let (series_t, series_s) = partial_series(scenario, n)?;
        let mut record = vec![n.to_string(), decimal(&backward), decimal(&forward_inv), decimal(&series_s), decimal(&series_t)];
        if exact_columns {
            for v in [&backward, &forward_inv, &series_s, &series_t] {
                record.push(if v.is_exact() { v.to_string() } else { String::new() });
            }
        }
        writer.write_record(&record).map_err(csv_error)?;
    }
    writer.into_inner().map_err(|e| RunError::Parameter(format!("csv: {e}")))
}

/// `Σ_{l=1}^{L} ‖χ_K ∏_{s=1}^{l n} w∘α^{-s}‖` (the `T`-series) and
/// `Σ_{l=1}^{L} ‖χ_K (∏_{s=0}^{l n-1} w∘α^s)^{-1}‖` (the `S`-series).
fn partial_series(scenario: &Scenario, n: u64) -> Result<(Scalar, Scalar), RunError> {
    let op = scenario.operator();
    let k = &scenario.k;
    let mut orbit = OrbitProducts::new(k);
    let sites = orbit.sites().to_vec();
    let mode = op.mode();
    let mut t_sum = Scalar::zero().in_mode(mode);
    let mut s_sum = Scalar::zero().in_mode(mode);
    for l in 1..=scenario.scan.series_terms {
        orbit.advance_to(&op, l * n);
        let b = GridFunction::from_entries(k.dim(), mode, sites.iter().copied().zip(orbit.backward().iter().cloned()))?;
        let f = GridFunction::from_entries(k.dim(), mode, sites.iter().copied().zip(orbit.forward().iter().map(Scalar::recip)))?;
        t_sum = &t_sum + &norm(&scenario.space, &b)?;
        s_sum = &s_sum + &norm(&scenario.space, &f)?;
    }
    Ok((t_sum, s_sum))
}

fn csv_error(e: csv::Error) -> RunError {
    RunError::Parameter(format!("csv: {e}"))
}

fn cartesian(grid: &[(String, Vec<toml::Value>)]) -> Vec<Vec<(String, toml::Value)>> {
    let mut cells: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, values) in grid {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = cell.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn run_sweep(scenario: &Scenario) -> Result<Status, RunError> {
    let spec = scenario.sweep.as_ref().ok_or_else(|| RunError::Parameter("sweep needs a [sweep] table".into()))?;
    let grid: Vec<(String, Vec<toml::Value>)> = spec.grid.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(RunError::Parameter("[sweep]: grid needs at least one value per key".into()));
    }
    let cells = cartesian(&grid);
    let width = cells.len().to_string().len().max(3);
    let cells_dir = scenario.output_dir.join("cells");
    let run_cell = |(i, overrides): (usize, &Vec<(String, toml::Value)>)| -> Result<SweepCell, RunError> {
        let name = format!("cell_{i:0width$}");
        let cell = scenario.with_weight_overrides(overrides).map_err(|e| RunError::Parameter(format!("[sweep] {name}: {e}")))?;
        let dir = cells_dir.join(&name);
        fs::create_dir_all(&dir).map_err(|e| RunError::Io(dir.clone(), e))?;
        let cell = Scenario { command: Command::Check, output_dir: dir.clone(), ..cell };
        let mut report = base_report(&cell)?;
        report.reports = criterion_reports(&cell)?;
        if report.reports.iter().all(CriterionReport::is_inconclusive) {
            report.status = Status::Inconclusive;
        }
        write_file(&dir.join("decay.csv"), &decay_csv(&cell)?)?;
        write_file(&dir.join("report.json"), &to_json(&report))?;
        Ok(SweepCell {
            cell: name,
            params: overrides.iter().map(|(k, v)| (k.clone(), value_text(v))).collect(),
            status: report.status,
            verdicts: report.reports.iter().map(|r| (r.condition_id.to_string(), r.verdict)).collect(),
        })
    };
    let results: Vec<Result<SweepCell, RunError>> = if spec.parallel {
        cells.par_iter().enumerate().map(run_cell).collect()
    } else {
        cells.iter().enumerate().map(run_cell).collect()
    };
    let cells = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(grid.iter().map(|(k, _)| k.clone()));
    header.push("status".into());
    // the weight-bounds check reports under a cell-dependent id, so it gets
    // an id column of its own; the remaining ids are the same in every cell
    header.extend(["bounds_condition".to_string(), "bounds_verdict".to_string()]);
    if let Some(first) = cells.first() {
        header.extend(first.verdicts.iter().skip(1).map(|(id, _)| id.clone()));
    }
    writer.write_record(&header).map_err(csv_error)?;
    for c in &cells {
        let mut row = vec![c.cell.clone()];
        row.extend(c.params.iter().map(|(_, v)| v.clone()));
        row.push(serde_json::to_value(c.status).expect("status").as_str().expect("string").to_string());
        if let Some((id, v)) = c.verdicts.first() {
            row.extend([id.clone(), format!("{v:?}")]);
        }
        row.extend(c.verdicts.iter().skip(1).map(|(_, v)| format!("{v:?}")));
        writer.write_record(&row).map_err(csv_error)?;
    }
    let summary = writer.into_inner().map_err(|e| RunError::Parameter(format!("csv: {e}")))?;
    write_file(&scenario.output_dir.join("summary.csv"), &summary)?;

    let mut report = base_report(scenario)?;
    report.cells = Some(cells);
    write_file(&scenario.output_dir.join("report.json"), &to_json(&report))?;
    Ok(Status::Completed)
}
