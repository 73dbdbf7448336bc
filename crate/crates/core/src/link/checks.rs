//! Numerical consistency checks between the greedy strategy and the
//! maximum-principle conditions, and the scale invariance of the greedy rule.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{costate_backward, edge_power, simulate_attack1, switching_functions};
use super::{Attack1Outcome, SweepOutcome};
use crate::model::NetworkTopology;
use crate::{Error, Result, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub steps: usize,
    /// Fraction of steps where greedy and sweep break the same links.
    pub set_agreement: f64,
    /// Fraction of steps where the top-`ℓ` edges by power equal the
    /// switching-law selection on the sweep trajectory.
    pub ordering_agreement: f64,
    /// Fraction of steps that pass either test (equal sets, or equal
    /// orderings with a small objective gap).
    pub agreement: f64,
    /// `|J_greedy − J_sweep| / J_greedy` (absolute when `J_greedy = 0`).
    pub objective_gap: f64,
}

/// Compares a greedy run with a sweep run step by step.
///
/// A step agrees when both break the same links, or when they differ but the
/// objectives are within `tolerance` (relative) and the power ranking and the
/// switching-function ranking select the same top set. Only edges that carry
/// power enter the ranking comparison, so a consensus state agrees vacuously.
pub fn verify_greedy_mp_consistency(
    greedy: &Attack1Outcome,
    sweep: &SweepOutcome,
    topology: &NetworkTopology,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    let steps = greedy.schedule.len();
    if sweep.schedule.len() != steps {
        return Err(Error::DimensionMismatch {
            what: "sweep schedule",
            expected: steps,
            found: sweep.schedule.len(),
        });
    }
    let costates = sweep
        .trajectory
        .costates()
        .ok_or(Error::InvalidParameter("sweep trajectory has no co-state"))?;
    let budget = greedy.budget;
    let gap = if greedy.objective > 0.0 {
        (greedy.objective - sweep.objective).abs() / greedy.objective
    } else {
        (greedy.objective - sweep.objective).abs()
    };

    let (mut same_set, mut same_order, mut agree) = (0usize, 0usize, 0usize);
    for k in 0..steps {
        let sets_equal = greedy.schedule[k].bits() == sweep.schedule[k].bits();
        let x = sweep.trajectory.state(k);
        let power = edge_power(x, topology);
        let top_power: BTreeSet<usize> = power
            .ranking
            .iter()
            .copied()
            .filter(|&e| power.powers[e] > 0.0)
            .take(budget)
            .collect();
        let switching = switching_functions(x, &costates[k], topology, budget)?;
        let top_switching: BTreeSet<usize> = switching.selected.iter().copied().collect();
        let orders_equal = top_power == top_switching;

        same_set += sets_equal as usize;
        same_order += orders_equal as usize;
        agree += (sets_equal || (orders_equal && gap <= tolerance)) as usize;
    }
    let frac = |c: usize| if steps == 0 { 1.0 } else { c as f64 / steps as f64 };
    Ok(ConsistencyReport {
        steps,
        set_agreement: frac(same_set),
        ordering_agreement: frac(same_order),
        agreement: frac(agree),
        objective_gap: gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleInvarianceReport {
    pub factor: f64,
    pub schedules_identical: bool,
    /// Steps whose switching-function signs differ between the two runs.
    pub sign_mismatches: Vec<usize>,
    /// Largest `|w̃ − c²w| / (c² max w)` at `t = 0`.
    pub power_scaling_error: f64,
}

impl ScaleInvarianceReport {
    pub fn holds(&self) -> bool {
        self.schedules_identical && self.sign_mismatches.is_empty()
    }
}

/// Runs the greedy attack from `x0` and from `c·x0` and compares them.
pub fn verify_scale_invariance(
    scenario: &Scenario,
    budget: usize,
    c: f64,
) -> Result<ScaleInvarianceReport> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter(
            "scale factor must be finite and nonzero",
        ));
    }
    let scaled_scenario = scenario.with_scaled_state(c);
    let base = simulate_attack1(scenario, budget)?;
    let scaled = simulate_attack1(&scaled_scenario, budget)?;
    let topology = &scenario.topology;

    let w = edge_power(&scenario.x0, topology).powers;
    let w_scaled = edge_power(&scaled_scenario.x0, topology).powers;
    let w_max = w.iter().fold(0.0f64, |m, v| m.max(*v));
    let power_scaling_error = if w_max > 0.0 {
        w.iter()
            .zip(&w_scaled)
            .map(|(a, b)| (b - c * c * a).abs() / (c * c * w_max))
            .fold(0.0, f64::max)
    } else {
        w_scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };

    let p = costate_backward(&base.trajectory, &base.schedule, topology, &scenario.kernel)?;
    let p_scaled = costate_backward(
        &scaled.trajectory,
        &scaled.schedule,
        topology,
        &scenario.kernel,
    )?;
    let mut sign_mismatches = Vec::new();
    for k in 0..scenario.grid.steps() {
        let f = switching_functions(base.trajectory.state(k), &p[k], topology, budget)?.values;
        let g = switching_functions(scaled.trajectory.state(k), &p_scaled[k], topology, budget)?
            .values;
        if signs(&f) != signs(&g) {
            sign_mismatches.push(k);
        }
    }

    Ok(ScaleInvarianceReport {
        factor: c,
        schedules_identical: base.schedule == scaled.schedule,
        sign_mismatches,
        power_scaling_error,
    })
}

// Values within rounding of zero (relative to the largest) count as zero.
fn signs(values: &[f64]) -> Vec<i8> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .map(|&v| {
            if v.abs() <= 1e-12 * scale {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}
