use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Kernel, PropagatorCache, Trajectory};
use crate::model::{LinkControl, NetworkTopology};
use crate::{Error, Result};

/// Integrates `ṗ = −2k(t)(x − x̄) − A(t)ᵀp`, `p(T) = 0` backward.
///
/// Each step uses the exact homogeneous solution `e^{A_k h}` and the
/// trapezoid rule for the forcing integral:
/// `p_k = e^{A_k h} p_{k+1} + h [k_k e_k + e^{A_k h} k_{k+1} e_{k+1}]`.
pub fn costate_backward(
    traj: &Trajectory,
    schedule: &[LinkControl],
    topology: &NetworkTopology,
    kernel: &Kernel,
) -> Result<Vec<Vec<f64>>> {
    let grid = traj.grid();
    if schedule.len() != grid.steps() {
        return Err(Error::DimensionMismatch {
            what: "control schedule",
            expected: grid.steps(),
            found: schedule.len(),
        });
    }
    let h = grid.step();
    let xbar = traj.initial_average();
    let forcing = |k: usize| -> Vec<f64> {
        let kv = kernel.eval(grid.time(k));
        traj.state(k).iter().map(|v| kv * (v - xbar)).collect()
    };
    let n = topology.nodes();
    let mut cache = PropagatorCache::new(topology, h);
    let mut p = vec![vec![0.0; n]; grid.points()];
    let mut next_forcing = forcing(grid.steps());
    for k in (0..grid.steps()).rev() {
        let e = &cache.get(&schedule[k])?.full;
        let here = forcing(k);
        let carried: Vec<f64> = p[k + 1]
            .iter()
            .zip(&next_forcing)
            .map(|(pv, fv)| pv + h * fv)
            .collect();
        let moved = e.mul_vec(&carried);
        p[k] = moved.iter().zip(&here).map(|(m, f)| m + h * f).collect();
        next_forcing = here;
    }
    Ok(p)
}

/// Switching functions at one instant and the control law they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingReport {
    /// `f_ij = a_ij (p_j − p_i)(x_i − x_j)` per edge, in edge order.
    pub values: Vec<f64>,
    /// Edge positions in nondecreasing `f` order (ties by slot).
    pub order: Vec<usize>,
    /// Edges with `f < 0` and `f ≤ f_{ℓ+1}`.
    pub candidates: Vec<usize>,
    /// The (at most) `ℓ` smallest candidates: the links to break.
    pub selected: Vec<usize>,
    pub control: LinkControl,
}

/// Evaluates the switching functions and the bang-bang control law.
///
/// Edges with `f_ij > 0` are kept; edges with `f_ij = 0` are also kept (the
/// law leaves them free and we choose not to intervene).
pub fn switching_functions(
    x: &[f64],
    p: &[f64],
    topology: &NetworkTopology,
    budget: usize,
) -> Result<SwitchingReport> {
    switching_functions_signed(x, p, topology, budget, false)
}

pub(crate) fn switching_functions_signed(
    x: &[f64],
    p: &[f64],
    topology: &NetworkTopology,
    budget: usize,
    negate: bool,
) -> Result<SwitchingReport> {
    let n = topology.nodes();
    for (what, v) in [("state", x), ("co-state", p)] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: v.len(),
            });
        }
    }
    let sign = if negate { -1.0 } else { 1.0 };
    let values: Vec<f64> = topology
        .edges()
        .iter()
        .map(|e| sign * e.weight * (p[e.j] - p[e.i]) * (x[e.i] - x[e.j]))
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let threshold = order.get(budget).map_or(f64::INFINITY, |&e| values[e]);
    let candidates: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&e| values[e] < 0.0 && values[e] <= threshold)
        .collect();
    let selected: Vec<usize> = candidates.iter().copied().take(budget).collect();
    let control = LinkControl::from_edge_positions(topology, &selected, budget)?;
    Ok(SwitchingReport {
        values,
        order,
        candidates,
        selected,
        control,
    })
}
