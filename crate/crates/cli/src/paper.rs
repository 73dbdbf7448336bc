//! `reproduce-paper`: the four-agent example without attack, under link
//! breaking, and under noise injection, plus a table of checks.
//!
//! The noise run uses `P_max = 1` and `ν = 0.9·ν_max`. These are defaults of
//! this tool; the example does not fix them.

use std::path::{Path, PathBuf};

use consensus_attack_core::link::edge_power;

use crate::fixtures::paper_k4;
use crate::report::{write_report, ReportError};
use crate::run::{run_link, run_noise, run_simulate, Run};
use crate::scenario::{AttackSpec, LoadedScenario, NoiseSpec};

pub const NOISE_POWER: f64 = 1.0;
pub const NOISE_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub check: &'static str,
    pub value: String,
    pub expected: &'static str,
    pub passed: bool,
}

#[derive(Debug)]
pub struct Reproduction {
    pub runs: Vec<(&'static str, Run)>,
    pub table: Vec<TableRow>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.table.iter().all(|r| r.passed)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Model(#[from] consensus_attack_core::Error),
    #[error(transparent)]
    Config(#[from] crate::scenario::ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub fn reproduce(steps: Option<usize>) -> Result<Reproduction, ReproduceError> {
    let mut base = paper_k4();
    if let Some(s) = steps {
        base = base.with_steps(s)?;
    }
    let ell = match base.config.attack {
        AttackSpec::Link(l) => l.ell,
        _ => 2,
    };
    let with_attack = |attack: AttackSpec| LoadedScenario {
        config: crate::scenario::ScenarioConfig {
            attack,
            ..base.config.clone()
        },
        scenario: base.scenario.clone(),
    };

    let none = run_simulate(&with_attack(AttackSpec::None))?;
    let link = run_link(&with_attack(base.config.attack), ell)?;
    let noise = run_noise(&with_attack(AttackSpec::Noise(NoiseSpec {
        p_max: NOISE_POWER,
        safety: Some(NOISE_SAFETY),
        nu: None,
    })))?;

    let s = &base.scenario;
    let powers = edge_power(&s.x0, &s.topology);
    let w13 = powers.power(&s.topology, 0, 2).unwrap_or(f64::NAN);
    let w14 = powers.power(&s.topology, 0, 3).unwrap_or(f64::NAN);
    let target = vec![(0, 2), (0, 3)];
    let hits = (0..s.grid.steps())
        .filter(|&k| link.greedy.broken_edges(&s.topology, k) == target)
        .count();
    let spread = none
        .trajectory
        .last()
        .iter()
        .fold(0.0f64, |m, v| m.max((v - 2.5).abs()));
    let (j0, j1, j2) = (none.objective, link.greedy.objective, noise.outcome.objective);
    let jb = noise.baseline.simulated;

    let table = vec![
        TableRow {
            check: "w13(0)",
            value: format!("{w13:.6}"),
            expected: "2.2101 +/- 5e-4",
            passed: (w13 - 2.2101).abs() <= 5e-4,
        },
        TableRow {
            check: "w14(0)",
            value: format!("{w14:.6}"),
            expected: "13.8979 +/- 5e-4",
            passed: (w14 - 13.8979).abs() <= 5e-4,
        },
        TableRow {
            check: "stationary {(1,3),(1,4)}",
            value: format!("{hits}/{} steps", s.grid.steps()),
            expected: "all steps",
            passed: hits == s.grid.steps(),
        },
        TableRow {
            check: "no attack: max|x_i(T) - 2.5|",
            value: format!("{spread:.6}"),
            expected: "< 0.05",
            passed: spread < 0.05,
        },
        TableRow {
            check: "J(link) > J(none)",
            value: format!("{j1:.6} > {j0:.6}"),
            expected: "true",
            passed: j1 > j0,
        },
        TableRow {
            check: "J(noise) >= max(J(none), J2)",
            value: format!("{j2:.6} >= {:.6}", j0.max(jb)),
            expected: "true",
            passed: j2 >= j0.max(jb) - 1e-6,
        },
    ];
    Ok(Reproduction {
        runs: vec![
            ("no_attack", Run::Simulate(none)),
            ("attack1", Run::Link(link)),
            ("attack2", Run::Noise(noise)),
        ],
        table,
    })
}

/// Writes every run into its own subdirectory and the table as `checks.csv`.
pub fn write_reproduction(r: &Reproduction, out: &Path) -> Result<Vec<PathBuf>, ReproduceError> {
    let mut written = Vec::new();
    for (name, run) in &r.runs {
        written.extend(write_report(run, &out.join(name))?);
    }
    let path = out.join("checks.csv");
    let csv_err = |e: csv::Error| ReproduceError::Io {
        path: path.clone(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["check", "value", "expected", "passed"])
        .map_err(csv_err)?;
    for row in &r.table {
        w.write_record([row.check, &row.value, row.expected, if row.passed { "true" } else { "false" }])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|source| ReproduceError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(written)
}

/// Plain-text rendering of the check table.
pub fn render_table(rows: &[TableRow]) -> String {
    let w = rows.iter().map(|r| r.check.len()).max().unwrap_or(0);
    let v = rows.iter().map(|r| r.value.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{:<4}  {:<w$}  {:<v$}  (expected {})\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.check,
            r.value,
            r.expected,
        ));
    }
    out
}
