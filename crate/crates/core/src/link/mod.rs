//! The link-breaking adversary.
//!
//! At every instant the adversary may remove up to `ℓ` edges. The closed-form
//! strategy ranks edges by dissipated power `w_ij = a_ij(x_j − x_i)²` and
//! breaks the `ℓ` largest ([`greedy_control`], run closed-loop by
//! [`simulate_attack1`]). The maximum-principle route instead integrates the
//! co-state backward and breaks edges by the sign and size of the switching
//! functions ([`switching_functions`], iterated by [`forward_backward_sweep`]).
//! [`checks`] compares the two, and [`oracle`] enumerates piecewise-constant
//! schedules by brute force.

mod costate;
mod sweep;

pub mod checks;
pub mod oracle;

use alloc::vec::Vec;

pub use costate::{costate_backward, switching_functions, SwitchingReport};
pub use sweep::{forward_backward_sweep, SweepOptions, SweepOutcome};

use crate::dynamics::{average_and_disagreement, objective, PropagatorCache, Trajectory};
use crate::model::{connected_components, has_cut_within, LinkControl, NetworkTopology};
use crate::{Error, Result, Scenario};

/// Relative disagreement below which the network counts as having reached
/// consensus (the adversary lost).
pub const CONSENSUS_TOLERANCE: f64 = 1e-6;

/// Per-edge dissipated power and the edges ranked by it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePowerReport {
    /// `w` for each edge, in [`NetworkTopology::edges`] order.
    pub powers: Vec<f64>,
    /// Edge positions, largest power first; ties keep slot order.
    pub ranking: Vec<usize>,
}

impl EdgePowerReport {
    pub fn power(&self, topology: &NetworkTopology, i: usize, j: usize) -> Option<f64> {
        topology.edge_position(i, j).map(|p| self.powers[p])
    }
}

/// `w_ij = a_ij (x_j − x_i)²` for every edge.
pub fn edge_power(x: &[f64], topology: &NetworkTopology) -> EdgePowerReport {
    let powers: Vec<f64> = topology
        .edges()
        .iter()
        .map(|e| {
            let d = x[e.j] - x[e.i];
            e.weight * d * d
        })
        .collect();
    let mut ranking: Vec<usize> = (0..powers.len()).collect();
    ranking.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]));
    EdgePowerReport { powers, ranking }
}

/// Breaks the `budget` edges with the largest dissipated power.
///
/// Zero-power edges are still taken when fewer than `budget` edges carry
/// power, so the control always uses its full budget.
pub fn greedy_control(x: &[f64], topology: &NetworkTopology, budget: usize) -> Result<LinkControl> {
    if budget > topology.edge_count() {
        return Err(Error::BudgetExceeded {
            budget,
            limit: topology.edge_count(),
        });
    }
    if x.len() != topology.nodes() {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: topology.nodes(),
            found: x.len(),
        });
    }
    let report = edge_power(x, topology);
    LinkControl::from_edge_positions(topology, &report.ranking[..budget], budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// The surviving graph ends disconnected and the nodes disagree.
    Winning,
    /// The nodes reached consensus.
    Losing,
    /// Neither, within the horizon.
    Ongoing,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Winning => "winning",
            Classification::Losing => "losing",
            Classification::Ongoing => "ongoing",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Attack1Outcome {
    pub trajectory: Trajectory,
    /// One control per grid step.
    pub schedule: Vec<LinkControl>,
    pub objective: f64,
    pub classification: Classification,
    pub budget: usize,
}

impl Attack1Outcome {
    /// Broken pairs (zero-based) during step `k`.
    pub fn broken_edges(&self, topology: &NetworkTopology, k: usize) -> Vec<(usize, usize)> {
        self.schedule[k].broken_pairs(topology.index())
    }

    /// Whether the same links are broken on every step.
    pub fn is_stationary(&self) -> bool {
        self.schedule.windows(2).all(|w| w[0] == w[1])
    }
}

/// Applies [`greedy_control`] at each grid point (zero-order hold) and
/// advances the state one step under it.
pub fn simulate_attack1(scenario: &Scenario, budget: usize) -> Result<Attack1Outcome> {
    let topology = &scenario.topology;
    let grid = &scenario.grid;
    if budget > topology.edge_count() {
        return Err(Error::BudgetExceeded {
            budget,
            limit: topology.edge_count(),
        });
    }
    let mut cache = PropagatorCache::new(topology, grid.step());
    let mut states = Vec::with_capacity(grid.points());
    let mut dense = Vec::with_capacity(4 * grid.steps());
    let mut schedule = Vec::with_capacity(grid.steps());
    let (avg, mut e) = average_and_disagreement(&scenario.x0);
    states.push(scenario.x0.clone());
    for _ in 0..grid.steps() {
        let control = greedy_control(&states[states.len() - 1], topology, budget)?;
        e = cache.get(&control)?.advance_about(avg, &e, &mut dense);
        schedule.push(control);
        states.push(e.iter().map(|v| avg + v).collect());
    }
    let trajectory = Trajectory::new(*grid, states)?.with_dense(dense);
    let objective = objective(&trajectory, &scenario.kernel);
    let classification = classify(&trajectory, schedule.last(), topology, budget);
    Ok(Attack1Outcome {
        trajectory,
        schedule,
        objective,
        classification,
        budget,
    })
}

/// Winning/losing/ongoing for a finished run.
pub fn classify(
    trajectory: &Trajectory,
    final_control: Option<&LinkControl>,
    topology: &NetworkTopology,
    budget: usize,
) -> Classification {
    let avg = trajectory.initial_average();
    let spread = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max((v - avg).abs()));
    let initial = spread(trajectory.initial());
    let last = spread(trajectory.last());
    if last <= CONSENSUS_TOLERANCE * initial {
        return Classification::Losing;
    }
    let disconnected = final_control
        .map(|u| connected_components(topology, u).len() > 1)
        .unwrap_or(false);
    if disconnected && has_cut_within(topology, budget) {
        Classification::Winning
    } else {
        Classification::Ongoing
    }
}
