//! Output files: `trajectory.csv`, `broken_edges.csv` or `control.csv`, and
//! `summary.json`.
//!
//! Numbers in CSV files are written with 17 significant digits. The same
//! run always produces byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use consensus_attack_core::dynamics::Trajectory;
use serde::Serialize;
use thiserror::Error;

use crate::run::{LinkRun, NoiseRun, Run, SimulateRun};
use crate::scenario::{KernelSpec, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `t,x1,…,xn[,p1,…,pn]`, one row per grid point.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), ReportError> {
    let n = traj.initial().len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let costates = traj.costates();
    if costates.is_some() {
        header.extend((1..=n).map(|i| format!("p{i}")));
    }
    let grid = *traj.grid();
    let rows = (0..grid.points()).map(|k| {
        let mut row = vec![number(grid.time(k))];
        row.extend(traj.state(k).iter().map(|&v| number(v)));
        if let Some(p) = costates {
            row.extend(p[k].iter().map(|&v| number(v)));
        }
        row
    });
    write_rows(path, &header, rows)
}

/// `t,edge_i,edge_j`: one row per broken link per step, nodes 1-based.
pub fn write_broken_edges_csv(path: &Path, run: &LinkRun) -> Result<(), ReportError> {
    let topology = &run.loaded.scenario.topology;
    let grid = run.loaded.scenario.grid;
    let header = ["t", "edge_i", "edge_j"].map(String::from);
    let rows = (0..grid.steps()).flat_map(|k| {
        run.greedy
            .broken_edges(topology, k)
            .into_iter()
            .map(move |(i, j)| vec![number(grid.time(k)), (i + 1).to_string(), (j + 1).to_string()])
    });
    write_rows(path, &header, rows)
}

/// `t,u1,…,un`, one row per grid point.
pub fn write_control_csv(path: &Path, run: &NoiseRun) -> Result<(), ReportError> {
    let grid = run.loaded.scenario.grid;
    let n = run.loaded.scenario.nodes();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("u{i}")));
    let rows = run.outcome.control.values.iter().enumerate().map(|(k, u)| {
        let mut row = vec![number(grid.time(k))];
        row.extend(u.iter().map(|&v| number(v)));
        row
    });
    write_rows(path, &header, rows)
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub attack: &'static str,
    pub nodes: usize,
    pub edges: usize,
    /// `false` flags a disconnected input topology.
    pub connected: bool,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub kernel: KernelSpec,
    pub initial_average: f64,
}

impl ScenarioSummary {
    fn new(config: &ScenarioConfig, run: &Run) -> Self {
        let s = &run.loaded().scenario;
        ScenarioSummary {
            name: config.name.clone(),
            attack: config.attack.label(),
            nodes: s.nodes(),
            edges: s.topology.edge_count(),
            connected: s.topology.is_connected(),
            horizon: s.grid.horizon(),
            steps: s.grid.steps(),
            x0: s.x0.clone(),
            kernel: config.kernel.clone(),
            initial_average: run.trajectory().initial_average(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LinkSummary {
    pub ell: usize,
    pub classification: &'static str,
    pub stationary: bool,
    pub unattacked_objective: f64,
    pub sweep_objective: f64,
    pub sweep_converged: bool,
    pub sweep_iterations: usize,
    pub sweep_cycle_detected: bool,
    pub set_agreement: f64,
    pub ordering_agreement: f64,
    pub agreement: f64,
    pub objective_gap: f64,
}

#[derive(Debug, Serialize)]
pub struct NoiseSummary {
    pub p_max: f64,
    pub nu: f64,
    pub nu_max: f64,
    pub q: f64,
    pub kernel_sup: f64,
    pub kernel_tail: f64,
    pub scaled_objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub max_contraction_ratio: Option<f64>,
    pub multiplier_max: f64,
    pub multiplier_max_slackness: f64,
    pub multiplier_sign_violations: usize,
    pub unattacked_objective: f64,
    pub baseline_objective: f64,
    pub baseline_closed_form: f64,
    pub baseline_lower_bound: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub scenario: ScenarioSummary,
    pub objective: f64,
    pub final_disagreement: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSummary>,
}

pub fn summarize(run: &Run) -> Summary {
    let config = &run.loaded().config;
    let link = match run {
        Run::Link(r) => Some(LinkSummary {
            ell: r.greedy.budget,
            classification: r.greedy.classification.as_str(),
            stationary: r.greedy.is_stationary(),
            unattacked_objective: r.unattacked_objective,
            sweep_objective: r.sweep.objective,
            sweep_converged: r.sweep.converged,
            sweep_iterations: r.sweep.iterations,
            sweep_cycle_detected: r.sweep.cycle_detected,
            set_agreement: r.consistency.set_agreement,
            ordering_agreement: r.consistency.ordering_agreement,
            agreement: r.consistency.agreement,
            objective_gap: r.consistency.objective_gap,
        }),
        _ => None,
    };
    let noise = match run {
        Run::Noise(r) => {
            let o = &r.outcome;
            Some(NoiseSummary {
                p_max: o.setup.p_max,
                nu: o.setup.nu,
                nu_max: o.setup.nu_max,
                q: o.setup.q,
                kernel_sup: o.setup.kernel_sup,
                kernel_tail: o.setup.kernel_tail,
                scaled_objective: o.scaled_objective,
                converged: o.converged,
                iterations: o.iterations,
                residuals: o.residuals.clone(),
                max_contraction_ratio: o
                    .contraction_ratios()
                    .into_iter()
                    .skip(1)
                    .reduce(f64::max),
                multiplier_max: o.multipliers.max_value,
                multiplier_max_slackness: o.multipliers.max_slackness,
                multiplier_sign_violations: o.multipliers.sign_violations(1e-12).len(),
                unattacked_objective: r.unattacked_objective,
                baseline_objective: r.baseline.simulated,
                baseline_closed_form: r.baseline.closed_form,
                baseline_lower_bound: r.baseline.lower_bound,
            })
        }
        _ => None,
    };
    Summary {
        scenario: ScenarioSummary::new(config, run),
        objective: run.objective(),
        final_disagreement: run.final_disagreement(),
        link,
        noise,
    }
}

/// Writes all files for a run into `dir` (created if needed) and returns
/// their paths.
pub fn write_report(run: &Run, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let trajectory = dir.join("trajectory.csv");
    write_trajectory_csv(&trajectory, run.trajectory())?;
    written.push(trajectory);
    match run {
        Run::Simulate(SimulateRun { .. }) => {}
        Run::Link(r) => {
            let path = dir.join("broken_edges.csv");
            write_broken_edges_csv(&path, r)?;
            written.push(path);
        }
        Run::Noise(r) => {
            let path = dir.join("control.csv");
            write_control_csv(&path, r)?;
            written.push(path);
        }
    }
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summarize(run)).map_err(|source| {
        ReportError::Json {
            path: path.clone(),
            source,
        }
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}
