//! Brute-force search over piecewise-constant link schedules.
//!
//! The horizon is cut into `intervals` equal pieces; on each piece the
//! adversary holds one admissible broken set (any subset of at most `ℓ`
//! edges). Every combination is evaluated with the same exponential stepping
//! and Gauss quadrature as the main path, sharing work between schedules with
//! a common prefix. Ties keep the first schedule in enumeration order
//! (broken-set size, then lexicographic edge positions, interval by interval).

use alloc::vec::Vec;

use super::simulate_attack1;
use crate::dynamics::StepPropagator;
use crate::math::GAUSS_4;
use crate::model::{build_system_matrix, for_each_combination, LinkControl};
use crate::{Error, Result, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    pub objective: f64,
    /// Broken set on each interval.
    pub schedule: Vec<LinkControl>,
    /// Number of complete schedules evaluated.
    pub evaluated: usize,
}

/// Every admissible broken set for `budget`, in enumeration order.
pub fn admissible_controls(scenario: &Scenario, budget: usize) -> Result<Vec<LinkControl>> {
    let topology = &scenario.topology;
    let m = topology.edge_count();
    if budget > m {
        return Err(Error::BudgetExceeded { budget, limit: m });
    }
    let mut out = Vec::new();
    let mut failure = None;
    for size in 0..=budget {
        for_each_combination(m, size, |positions| {
            match LinkControl::from_edge_positions(topology, positions, budget) {
                Ok(u) => out.push(u),
                Err(e) => failure = Some(e),
            }
        });
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Best objective over all piecewise-constant schedules with `intervals`
/// pieces drawn from `controls`.
pub fn best_piecewise_schedule(
    scenario: &Scenario,
    controls: &[LinkControl],
    intervals: usize,
) -> Result<EnumerationResult> {
    let grid = &scenario.grid;
    if intervals == 0 || !grid.steps().is_multiple_of(intervals) {
        return Err(Error::InvalidParameter(
            "grid steps must be a positive multiple of the interval count",
        ));
    }
    if controls.is_empty() {
        return Err(Error::InvalidParameter("no admissible controls to enumerate"));
    }
    let h = grid.step();
    let mut propagators = Vec::with_capacity(controls.len());
    for u in controls {
        propagators.push(StepPropagator::new(
            &build_system_matrix(&scenario.topology, u)?,
            h,
        ));
    }
    // k(t) at the Gauss nodes of every step, pre-multiplied by h·weight.
    let weights: Vec<[f64; 4]> = (0..grid.steps())
        .map(|k| {
            let t0 = grid.time(k);
            GAUSS_4.map(|(s, w)| h * w * scenario.kernel.eval(t0 + s * h))
        })
        .collect();
    let xbar = scenario.x0.iter().sum::<f64>() / scenario.nodes() as f64;

    let mut search = Search {
        propagators: &propagators,
        weights: &weights,
        xbar,
        per_interval: grid.steps() / intervals,
        intervals,
        path: Vec::with_capacity(intervals),
        best: None,
        evaluated: 0,
    };
    search.descend(&scenario.x0, 0.0);

    let (objective, path) = search.best.expect("at least one schedule evaluated");
    Ok(EnumerationResult {
        objective,
        schedule: path.into_iter().map(|c| controls[c].clone()).collect(),
        evaluated: search.evaluated,
    })
}

struct Search<'a> {
    propagators: &'a [StepPropagator],
    weights: &'a [[f64; 4]],
    xbar: f64,
    per_interval: usize,
    intervals: usize,
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    evaluated: usize,
}

impl Search<'_> {
    fn descend(&mut self, x: &[f64], partial: f64) {
        let level = self.path.len();
        let first_step = level * self.per_interval;
        for c in 0..self.propagators.len() {
            let prop = &self.propagators[c];
            let mut state = x.to_vec();
            let mut acc = partial;
            for k in first_step..first_step + self.per_interval {
                for (g, m) in prop.stages.iter().enumerate() {
                    let xs = m.mul_vec(&state);
                    let sq: f64 = xs.iter().map(|v| (v - self.xbar) * (v - self.xbar)).sum();
                    acc += self.weights[k][g] * sq;
                }
                state = prop.full.mul_vec(&state);
            }
            self.path.push(c);
            if level + 1 == self.intervals {
                self.evaluated += 1;
                if self.best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    self.best = Some((acc, self.path.clone()));
                }
            } else {
                self.descend(&state, acc);
            }
            self.path.pop();
        }
    }
}

/// Greedy objective against the enumerated optimum for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub greedy: f64,
    pub best: EnumerationResult,
}

impl DominanceReport {
    /// `J_best ≤ J_greedy·(1 + rel_tol)`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.best.objective <= self.greedy * (1.0 + rel_tol)
    }

    pub fn ratio(&self) -> f64 {
        if self.greedy > 0.0 {
            self.best.objective / self.greedy
        } else if self.best.objective > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    }
}

/// Runs closed-loop greedy and the exhaustive search on the same scenario.
pub fn greedy_dominance(
    scenario: &Scenario,
    budget: usize,
    intervals: usize,
) -> Result<DominanceReport> {
    let greedy = simulate_attack1(scenario, budget)?.objective;
    let controls = admissible_controls(scenario, budget)?;
    let best = best_piecewise_schedule(scenario, &controls, intervals)?;
    Ok(DominanceReport { greedy, best })
}
