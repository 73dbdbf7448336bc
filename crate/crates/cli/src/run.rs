//! Runs a loaded scenario and collects everything the reports need.

use consensus_attack_core::dynamics::{disagreement_norm, objective, propagate_unattacked, Trajectory};
use consensus_attack_core::link::checks::{verify_greedy_mp_consistency, ConsistencyReport};
use consensus_attack_core::link::{
    forward_backward_sweep, simulate_attack1, Attack1Outcome, SweepOptions, SweepOutcome,
};
use consensus_attack_core::noise::{
    baseline_constant_control, simulate_attack2, Attack2Outcome, BaselineReport,
    FixedPointOptions,
};
use consensus_attack_core::Result;

use crate::scenario::{AttackSpec, LoadedScenario};

/// Relative objective gap under which greedy and sweep runs count as agreeing.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SimulateRun {
    pub loaded: LoadedScenario,
    pub trajectory: Trajectory,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct LinkRun {
    pub loaded: LoadedScenario,
    pub greedy: Attack1Outcome,
    pub sweep: SweepOutcome,
    pub consistency: ConsistencyReport,
    pub unattacked_objective: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseRun {
    pub loaded: LoadedScenario,
    pub outcome: Attack2Outcome,
    pub baseline: BaselineReport,
    pub unattacked_objective: f64,
}

#[derive(Debug, Clone)]
pub enum Run {
    Simulate(SimulateRun),
    Link(LinkRun),
    Noise(NoiseRun),
}

impl Run {
    pub fn loaded(&self) -> &LoadedScenario {
        match self {
            Run::Simulate(r) => &r.loaded,
            Run::Link(r) => &r.loaded,
            Run::Noise(r) => &r.loaded,
        }
    }

    pub fn objective(&self) -> f64 {
        match self {
            Run::Simulate(r) => r.objective,
            Run::Link(r) => r.greedy.objective,
            Run::Noise(r) => r.outcome.objective,
        }
    }

    pub fn trajectory(&self) -> &Trajectory {
        match self {
            Run::Simulate(r) => &r.trajectory,
            Run::Link(r) => &r.greedy.trajectory,
            Run::Noise(r) => &r.outcome.trajectory,
        }
    }

    /// `|x(T) − x̄|`.
    pub fn final_disagreement(&self) -> f64 {
        let t = self.trajectory();
        disagreement_norm(t.last(), t.initial_average())
    }
}

fn unattacked(loaded: &LoadedScenario) -> Result<(Trajectory, f64)> {
    let s = &loaded.scenario;
    let traj = propagate_unattacked(&s.x0, &s.topology, &s.grid)?;
    let j = objective(&traj, &s.kernel);
    Ok((traj, j))
}

pub fn run_simulate(loaded: &LoadedScenario) -> Result<SimulateRun> {
    let (trajectory, objective) = unattacked(loaded)?;
    Ok(SimulateRun {
        loaded: loaded.clone(),
        trajectory,
        objective,
    })
}

pub fn run_link(loaded: &LoadedScenario, ell: usize) -> Result<LinkRun> {
    let s = &loaded.scenario;
    let greedy = simulate_attack1(s, ell)?;
    let sweep = forward_backward_sweep(s, ell, &SweepOptions::default())?;
    let consistency =
        verify_greedy_mp_consistency(&greedy, &sweep, &s.topology, CONSISTENCY_TOLERANCE)?;
    let (_, unattacked_objective) = unattacked(loaded)?;
    Ok(LinkRun {
        loaded: loaded.clone(),
        greedy,
        sweep,
        consistency,
        unattacked_objective,
    })
}

pub fn run_noise(loaded: &LoadedScenario) -> Result<NoiseRun> {
    let AttackSpec::Noise(spec) = loaded.config.attack else {
        return Err(consensus_attack_core::Error::InvalidParameter(
            "scenario has no noise attack",
        ));
    };
    let s = &loaded.scenario;
    let outcome = simulate_attack2(s, &spec.params(), &FixedPointOptions::default())?;
    let baseline = baseline_constant_control(s, spec.p_max)?;
    let (_, unattacked_objective) = unattacked(loaded)?;
    Ok(NoiseRun {
        loaded: loaded.clone(),
        outcome,
        baseline,
        unattacked_objective,
    })
}
