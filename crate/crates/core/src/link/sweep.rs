use alloc::vec;
use alloc::vec::Vec;

use super::costate::{costate_backward, switching_functions_signed};
use crate::dynamics::{objective, propagate, Trajectory};
use crate::model::LinkControl;
use crate::{Error, Result, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_iter: usize,
    /// Fault-injection hook: flips the sign of every switching function so
    /// that consistency checks can be shown to fail. Never set in real runs.
    pub negate_switching: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_iter: 100,
            negate_switching: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Forward trajectory of the returned schedule, with its co-state.
    pub trajectory: Trajectory,
    pub schedule: Vec<LinkControl>,
    pub objective: f64,
    /// The schedule reproduced itself under the control law.
    pub converged: bool,
    pub iterations: usize,
    /// Best-response iteration revisited an earlier schedule.
    pub cycle_detected: bool,
}

/// Forward–backward sweep on the maximum-principle conditions.
///
/// Starting from the unattacked schedule, each iteration propagates the state,
/// integrates the co-state backward, and replaces every step's control by the
/// switching-function law evaluated at the start of the step. Controls are
/// bang-bang, so there is no relaxation: the sweep stops when the schedule
/// reproduces itself, when a previously seen schedule comes back (a cycle), or
/// at `max_iter`. In the last two cases the best-`J` iterate is returned with
/// `converged = false`.
pub fn forward_backward_sweep(
    scenario: &Scenario,
    budget: usize,
    options: &SweepOptions,
) -> Result<SweepOutcome> {
    let topology = &scenario.topology;
    let grid = &scenario.grid;
    if budget > topology.edge_count() {
        return Err(Error::BudgetExceeded {
            budget,
            limit: topology.edge_count(),
        });
    }
    if options.max_iter == 0 {
        return Err(Error::InvalidParameter("sweep needs at least one iteration"));
    }

    let mut schedule = vec![LinkControl::none(topology).with_budget(budget); grid.steps()];
    let mut seen: Vec<Vec<LinkControl>> = Vec::new();
    let mut best: Option<(f64, Vec<LinkControl>, Trajectory)> = None;

    for iteration in 1..=options.max_iter {
        let traj = propagate(&scenario.x0, &schedule, topology, grid)?;
        let j = objective(&traj, &scenario.kernel);
        let p = costate_backward(&traj, &schedule, topology, &scenario.kernel)?;
        let traj = traj.with_costates(p)?;
        let costates = traj.costates().expect("just attached");

        let mut next = Vec::with_capacity(grid.steps());
        for k in 0..grid.steps() {
            let report = switching_functions_signed(
                traj.state(k),
                &costates[k],
                topology,
                budget,
                options.negate_switching,
            )?;
            next.push(report.control);
        }

        if next == schedule {
            return Ok(SweepOutcome {
                trajectory: traj,
                schedule,
                objective: j,
                converged: true,
                iterations: iteration,
                cycle_detected: false,
            });
        }

        if best.as_ref().is_none_or(|(bj, _, _)| j > *bj) {
            best = Some((j, schedule.clone(), traj));
        }
        let cycle = seen.contains(&next);
        seen.push(core::mem::replace(&mut schedule, next));
        if cycle {
            let (objective, schedule, trajectory) = best.expect("at least one iterate");
            return Ok(SweepOutcome {
                trajectory,
                schedule,
                objective,
                converged: false,
                iterations: iteration,
                cycle_detected: true,
            });
        }
    }

    let (objective, schedule, trajectory) = best.expect("at least one iterate");
    Ok(SweepOutcome {
        trajectory,
        schedule,
        objective,
        converged: false,
        iterations: options.max_iter,
        cycle_detected: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Kernel, TimeGrid};
    use crate::link::tests::paper_scenario;
    use crate::link::{simulate_attack1, switching_functions};
    use crate::model::NetworkTopology;

    #[test]
    fn paper_sweep_matches_greedy() {
        let s = paper_scenario(400);
        let sweep = forward_backward_sweep(&s, 2, &SweepOptions::default()).unwrap();
        assert!(sweep.converged);
        assert!(sweep.iterations <= 100);
        let greedy = simulate_attack1(&s, 2).unwrap();
        assert_eq!(sweep.schedule, greedy.schedule);
        assert!((sweep.objective - greedy.objective).abs() <= 1e-6 * greedy.objective);
    }

    #[test]
    fn consensus_start_converges_immediately() {
        let s = paper_scenario(50).with_state(vec![1.0; 4]).unwrap();
        let sweep = forward_backward_sweep(&s, 2, &SweepOptions::default()).unwrap();
        assert!(sweep.converged);
        assert_eq!(sweep.iterations, 1);
        assert_eq!(sweep.objective, 0.0);
    }

    #[test]
    fn single_edge_is_always_broken() {
        let t = NetworkTopology::new(2, [(0, 1, 1.0)]).unwrap();
        let s = Scenario::new(
            t,
            vec![0.0, 2.0],
            TimeGrid::new(2.0, 100).unwrap(),
            Kernel::default(),
        )
        .unwrap();
        let sweep = forward_backward_sweep(&s, 1, &SweepOptions::default()).unwrap();
        assert!(sweep.converged);
        assert!(sweep.schedule.iter().all(|u| u.broken_count() == 1));
        assert!((sweep.objective - 2.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_breaks_only_nonpositive_switching_edges() {
        let s = paper_scenario(200);
        let sweep = forward_backward_sweep(&s, 2, &SweepOptions::default()).unwrap();
        let p = sweep.trajectory.costates().unwrap();
        for k in 0..s.grid.steps() {
            let r = switching_functions(sweep.trajectory.state(k), &p[k], &s.topology, 2).unwrap();
            for pos in 0..s.topology.edge_count() {
                let e = s.topology.edges()[pos];
                if sweep.schedule[k].is_broken(s.topology.index(), e.i, e.j) {
                    assert!(r.values[pos] <= 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let s = paper_scenario(10);
        let opts = SweepOptions {
            max_iter: 0,
            ..SweepOptions::default()
        };
        assert!(forward_backward_sweep(&s, 2, &opts).is_err());
    }
}
