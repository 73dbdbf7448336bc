//! Time grid, kernel, state propagation and the disagreement objective
//! `J = ∫₀ᵀ k(t)|x(t) − x̄|² dt`.
//!
//! Controls are held constant over each grid step, so a step is advanced with
//! the exact exponential `e^{A_k h}`. Each step also records the state at the
//! four Gauss–Legendre nodes inside it ("dense output"); [`objective`]
//! integrates over those, which makes `J` exact to rounding for smooth
//! kernels instead of carrying the O(h²) error of the trapezoid rule.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Matrix, SymmetricEigen};
use crate::math::{self, GAUSS_4};
use crate::model::{build_system_matrix, LinkControl, NetworkTopology, SystemMatrix};
use crate::{Error, Result};

/// Uniform grid `t_k = k·T/steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter("horizon T must be positive"));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("grid needs at least one step"));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn points(&self) -> usize {
        self.steps + 1
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }

    /// Same horizon, twice the steps.
    pub fn refined(&self) -> Self {
        TimeGrid {
            horizon: self.horizon,
            steps: self.steps * 2,
        }
    }
}

/// The weight `k(t)` in the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Constant(f64),
    /// `(t, k)` samples, strictly increasing in `t`, linearly interpolated
    /// and held constant beyond the end points.
    Table(Vec<(f64, f64)>),
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Constant(1.0)
    }
}

impl Kernel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Constant(c) => *c,
            Kernel::Table(points) => {
                let first = points[0];
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, k0), (t1, k1)) = (w[0], w[1]);
                    if t <= t1 {
                        return k0 + (k1 - k0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    /// Samples the kernel on `grid` and derives the sup constants used by the
    /// noise adversary's contraction bound.
    pub fn profile(&self, grid: &TimeGrid) -> Result<KernelProfile> {
        if let Kernel::Table(points) = self {
            if points.is_empty() {
                return Err(Error::InvalidParameter("kernel table is empty"));
            }
            if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::InvalidParameter(
                    "kernel table times must be strictly increasing",
                ));
            }
        }
        let values: Vec<f64> = grid.times().map(|t| self.eval(t)).collect();
        if values.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::InvalidParameter("kernel must be positive on the grid"));
        }

        let h = grid.step();
        let times: Vec<f64> = grid.times().collect();
        let time_weighted = times
            .iter()
            .zip(&values)
            .fold(0.0f64, |m, (t, k)| m.max(t * k));
        // ∫_{t_i}^T τ k(τ) dτ by trapezoid, accumulated from the right.
        let mut tail = 0.0;
        let mut tail_moment: f64 = 0.0;
        for i in (0..grid.steps()).rev() {
            tail += 0.5 * h * (times[i] * values[i] + times[i + 1] * values[i + 1]);
            tail_moment = tail_moment.max(tail);
        }
        Ok(KernelProfile {
            values,
            sup_time_weighted: time_weighted,
            sup_tail_moment: tail_moment,
        })
    }
}

/// Kernel samples on a grid plus `ǩ = sup t·k(t)` and
/// `k̂ = sup_t ∫_t^T τ k(τ) dτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    pub values: Vec<f64>,
    pub sup_time_weighted: f64,
    pub sup_tail_moment: f64,
}

/// Sampled state (and optionally co-state) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<Vec<f64>>,
    costates: Option<Vec<Vec<f64>>>,
    // `4 * steps` states at the Gauss nodes of each step.
    dense: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<Vec<f64>>) -> Result<Self> {
        if states.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                what: "trajectory samples",
                expected: grid.points(),
                found: states.len(),
            });
        }
        Ok(Trajectory {
            grid,
            states,
            costates: None,
            dense: None,
        })
    }

    pub(crate) fn with_dense(mut self, dense: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(dense.len(), GAUSS_4.len() * self.grid.steps());
        self.dense = Some(dense);
        self
    }

    /// Attaches co-state samples. The last sample must be exactly zero.
    pub fn with_costates(mut self, costates: Vec<Vec<f64>>) -> Result<Self> {
        if costates.len() != self.grid.points() {
            return Err(Error::DimensionMismatch {
                what: "co-state samples",
                expected: self.grid.points(),
                found: costates.len(),
            });
        }
        if costates[self.grid.steps()].iter().any(|&p| p != 0.0) {
            return Err(Error::InvalidParameter("co-state must vanish at the horizon"));
        }
        self.costates = Some(costates);
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn initial(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.states[self.grid.steps()]
    }

    pub fn costates(&self) -> Option<&[Vec<f64>]> {
        self.costates.as_deref()
    }

    pub fn has_dense_output(&self) -> bool {
        self.dense.is_some()
    }

    /// `x_avg` of the initial state.
    pub fn initial_average(&self) -> f64 {
        average_and_disagreement(self.initial()).0
    }
}

/// `x_avg = Σx_i/n` and the disagreement `e = x − 1·x_avg`.
pub fn average_and_disagreement(x: &[f64]) -> (f64, Vec<f64>) {
    if x.is_empty() {
        return (0.0, Vec::new());
    }
    let avg = x.iter().sum::<f64>() / x.len() as f64;
    (avg, x.iter().map(|v| v - avg).collect())
}

/// `e^{At}` for a system matrix, via its symmetric eigendecomposition.
pub fn matrix_exponential(a: &SystemMatrix, t: f64) -> Result<Matrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(SymmetricEigen::new(a.matrix()).exp(t))
}

/// Exponentials needed to advance one grid step under a constant matrix:
/// `e^{Ah}` and `e^{A s_g h}` at the Gauss nodes.
#[derive(Debug, Clone)]
pub(crate) struct StepPropagator {
    pub(crate) full: Matrix,
    pub(crate) stages: [Matrix; 4],
}

impl StepPropagator {
    pub(crate) fn new(a: &SystemMatrix, h: f64) -> Self {
        let eig = SymmetricEigen::new(a.matrix());
        StepPropagator {
            full: eig.exp(h),
            stages: GAUSS_4.map(|(s, _)| eig.exp(s * h)),
        }
    }

    /// Advances the disagreement `e` about a fixed average one step. The four
    /// interior states `avg + e(s)` go onto `dense`.
    pub(crate) fn advance_about(&self, avg: f64, e: &[f64], dense: &mut Vec<Vec<f64>>) -> Vec<f64> {
        for m in &self.stages {
            dense.push(m.mul_vec(e).into_iter().map(|v| avg + v).collect());
        }
        self.full.mul_vec(e)
    }
}

/// Step propagators keyed by broken-link pattern, for one topology and step.
pub(crate) struct PropagatorCache<'a> {
    topology: &'a NetworkTopology,
    h: f64,
    map: BTreeMap<Vec<bool>, StepPropagator>,
}

impl<'a> PropagatorCache<'a> {
    pub(crate) fn new(topology: &'a NetworkTopology, h: f64) -> Self {
        PropagatorCache {
            topology,
            h,
            map: BTreeMap::new(),
        }
    }

    pub(crate) fn get(&mut self, control: &LinkControl) -> Result<&StepPropagator> {
        if !self.map.contains_key(control.bits()) {
            let a = build_system_matrix(self.topology, control)?;
            self.map
                .insert(control.bits().to_vec(), StepPropagator::new(&a, self.h));
        }
        Ok(&self.map[control.bits()])
    }
}

/// Runs `ẋ = A(t)x` with the link control held constant on each step.
pub fn propagate(
    x0: &[f64],
    schedule: &[LinkControl],
    topology: &NetworkTopology,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if schedule.len() != grid.steps() {
        return Err(Error::DimensionMismatch {
            what: "control schedule",
            expected: grid.steps(),
            found: schedule.len(),
        });
    }
    if x0.len() != topology.nodes() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: topology.nodes(),
            found: x0.len(),
        });
    }
    // A(t)1 = 0, so only the disagreement moves; stepping it directly keeps
    // the average exact and a consensus state exactly at rest.
    let (avg, mut e) = average_and_disagreement(x0);
    let shift = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|d| avg + d).collect() };
    let mut cache = PropagatorCache::new(topology, grid.step());
    let mut states = Vec::with_capacity(grid.points());
    let mut dense = Vec::with_capacity(4 * grid.steps());
    states.push(x0.to_vec());
    for control in schedule {
        e = cache.get(control)?.advance_about(avg, &e, &mut dense);
        states.push(shift(e.clone()));
    }
    Ok(Trajectory::new(*grid, states)?.with_dense(dense))
}

/// Unattacked run: every step uses the full topology.
pub fn propagate_unattacked(
    x0: &[f64],
    topology: &NetworkTopology,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let schedule = vec![LinkControl::none(topology); grid.steps()];
    propagate(x0, &schedule, topology, grid)
}

/// `J = ∫₀ᵀ k(t)|x(t) − x̄|² dt` with `x̄` the average of the initial state.
///
/// Uses the dense output when the trajectory carries it, the composite
/// trapezoid rule on the grid samples otherwise.
pub fn objective(traj: &Trajectory, kernel: &Kernel) -> f64 {
    let xbar = traj.initial_average();
    let sq = |x: &[f64]| x.iter().map(|v| (v - xbar) * (v - xbar)).sum::<f64>();
    let grid = traj.grid();
    let h = grid.step();
    match &traj.dense {
        Some(dense) => {
            let mut total = 0.0;
            for k in 0..grid.steps() {
                let t0 = grid.time(k);
                let step: f64 = GAUSS_4
                    .iter()
                    .zip(&dense[4 * k..4 * k + 4])
                    .map(|((s, w), x)| w * kernel.eval(t0 + s * h) * sq(x))
                    .sum();
                total += h * step;
            }
            total
        }
        None => {
            let f: Vec<f64> = traj
                .states
                .iter()
                .enumerate()
                .map(|(k, x)| kernel.eval(grid.time(k)) * sq(x))
                .collect();
            trapezoid(&f, h)
        }
    }
}

pub(crate) fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        len => h * (samples.iter().sum::<f64>() - 0.5 * (samples[0] + samples[len - 1])),
    }
}

/// `|x − 1·x_avg|` for a given average.
pub fn disagreement_norm(x: &[f64], avg: f64) -> f64 {
    math::sqrt(x.iter().map(|v| (v - avg) * (v - avg)).sum())
}
