//! The noise-injecting adversary.
//!
//! The adversary adds `u(t)` with `|u(t)|² ≤ P_max` to the consensus dynamics
//! `ẋ = Ax + u`. The optimal signal runs at full power along the co-state,
//! `u* = √P_max · p/|p|`, where `p` is a fixed point of an integral map
//! ([`CostateMap`]) that is a contraction once `ν` is small enough
//! ([`contraction_setup`]).

mod baseline;
mod fixed_point;

use alloc::vec::Vec;

pub use baseline::{baseline_constant_control, BaselineReport};
pub use fixed_point::{
    costate_fixed_point, g_term, CostateMap, CostateStart, FixedPointOptions, FixedPointOutcome,
};

use crate::dynamics::{objective, KernelProfile, TimeGrid, Trajectory};
use crate::linalg::SymmetricEigen;
use crate::math::{self, GAUSS_4};
use crate::model::{build_system_matrix, LinkControl, SystemMatrix};
use crate::{Error, Result, Scenario};

/// Default fraction of `ν_max` used when `ν` is not given.
pub const DEFAULT_SAFETY: f64 = 0.9;

/// How `ν` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuChoice {
    /// `ν = factor·ν_max`, with `0 < factor < 1`.
    Safety(f64),
    /// An explicit `ν`, which must lie in `(0, ν_max)`.
    Nu(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub p_max: f64,
    pub nu: NuChoice,
}

impl NoiseParams {
    pub fn new(p_max: f64) -> Self {
        NoiseParams {
            p_max,
            nu: NuChoice::Safety(DEFAULT_SAFETY),
        }
    }
}

/// Constants of the contraction argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSetup {
    pub nu: f64,
    pub nu_max: f64,
    /// Contraction factor `2ν√P_max(ǩ + k̂)`.
    pub q: f64,
    /// `ǩ = sup_t t·k(t)`.
    pub kernel_sup: f64,
    /// `k̂ = sup_t ∫_t^T τ k(τ) dτ`.
    pub kernel_tail: f64,
    pub p_max: f64,
}

/// `ν_max = 1/(2√P_max(ǩ + k̂))` and `ν = safety·ν_max`.
pub fn contraction_setup(
    profile: &KernelProfile,
    p_max: f64,
    safety: f64,
) -> Result<ContractionSetup> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidParameter("safety factor must lie in (0, 1)"));
    }
    let nu_max = nu_max(profile, p_max)?;
    setup_with(profile, p_max, safety * nu_max, nu_max)
}

/// Same as [`contraction_setup`] with an explicit `ν < ν_max`.
pub fn contraction_setup_with_nu(
    profile: &KernelProfile,
    p_max: f64,
    nu: f64,
) -> Result<ContractionSetup> {
    let nu_max = nu_max(profile, p_max)?;
    if !(nu > 0.0 && nu < nu_max) {
        return Err(Error::InvalidParameter("nu must lie in (0, nu_max)"));
    }
    setup_with(profile, p_max, nu, nu_max)
}

fn nu_max(profile: &KernelProfile, p_max: f64) -> Result<f64> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidParameter("power budget must be positive"));
    }
    let sum = profile.sup_time_weighted + profile.sup_tail_moment;
    if !(sum > 0.0 && sum.is_finite()) {
        return Err(Error::InvalidParameter("kernel constants must be positive"));
    }
    Ok(1.0 / (2.0 * math::sqrt(p_max) * sum))
}

fn setup_with(
    profile: &KernelProfile,
    p_max: f64,
    nu: f64,
    nu_max: f64,
) -> Result<ContractionSetup> {
    let kernel_sup = profile.sup_time_weighted;
    let kernel_tail = profile.sup_tail_moment;
    Ok(ContractionSetup {
        nu,
        nu_max,
        q: 2.0 * nu * math::sqrt(p_max) * (kernel_sup + kernel_tail),
        kernel_sup,
        kernel_tail,
        p_max,
    })
}

/// Noise samples on the grid points, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseControl {
    pub values: Vec<Vec<f64>>,
    pub p_max: f64,
}

impl NoiseControl {
    /// `√(P_max/n)·1` at every grid point.
    pub fn constant_full_power(n: usize, p_max: f64, grid: &TimeGrid) -> Self {
        let level = math::sqrt(p_max / n as f64);
        NoiseControl {
            values: alloc::vec![alloc::vec![level; n]; grid.points()],
            p_max,
        }
    }

    /// `|u(t_k)|²`.
    pub fn power(&self, k: usize) -> f64 {
        math::dot(&self.values[k], &self.values[k])
    }

    /// Largest `|u(t_k)|² − P_max` over the grid.
    pub fn max_excess_power(&self) -> f64 {
        (0..self.values.len()).fold(f64::NEG_INFINITY, |m, k| m.max(self.power(k) - self.p_max))
    }
}

/// `u = √P_max·p/|p|`, and `u = 0` where `|p| ≤ 10⁻¹⁰·max_t |p|`.
pub fn optimal_noise(p: &[Vec<f64>], p_max: f64) -> NoiseControl {
    let peak = p.iter().fold(0.0f64, |m, v| m.max(math::norm(v)));
    let floor = 1e-10 * peak;
    let gain = math::sqrt(p_max);
    let values = p
        .iter()
        .map(|v| {
            let norm = math::norm(v);
            if norm > floor && norm > 0.0 {
                v.iter().map(|x| gain * x / norm).collect()
            } else {
                alloc::vec![0.0; v.len()]
            }
        })
        .collect();
    NoiseControl { values, p_max }
}

// (e^{z} − 1)/z · s and (e^{z} − 1 − z)/z² · s² with z = λs.
fn phi1(lambda: f64, s: f64) -> f64 {
    let z = lambda * s;
    if z == 0.0 {
        s
    } else {
        s * math::expm1(z) / z
    }
}

fn phi2(lambda: f64, s: f64) -> f64 {
    let z = lambda * s;
    if z.abs() < 0.5 {
        // Σ z^k/(k+2)!
        let mut term = 0.5;
        let mut sum = 0.0;
        for k in 0..24 {
            sum += term;
            term *= z / (k + 3) as f64;
        }
        s * s * sum
    } else {
        s * s * (math::expm1(z) - z) / (z * z)
    }
}

/// Exact solution of `ẋ = Ax + u` for `u` linear on each step.
#[derive(Debug, Clone)]
struct ForcedStepper {
    eig: SymmetricEigen,
    h: f64,
    // per stage (the four Gauss nodes, then the full step): decay, φ1, φ2
    coeffs: [Vec<(f64, f64, f64)>; 5],
}

impl ForcedStepper {
    fn new(a: &SystemMatrix, h: f64) -> Self {
        let eig = SymmetricEigen::new(a.matrix());
        let fractions = [GAUSS_4[0].0, GAUSS_4[1].0, GAUSS_4[2].0, GAUSS_4[3].0, 1.0];
        let coeffs = fractions.map(|f| {
            let s = f * h;
            eig.values
                .iter()
                .map(|&l| (math::exp(l * s), phi1(l, s), phi2(l, s)))
                .collect()
        });
        ForcedStepper { eig, h, coeffs }
    }

    fn advance_modal(&self, y: &[f64], v0: &[f64], v1: &[f64], stage: usize) -> Vec<f64> {
        self.coeffs[stage]
            .iter()
            .enumerate()
            .map(|(m, (e, p1, p2))| e * y[m] + v0[m] * p1 + (v1[m] - v0[m]) / self.h * p2)
            .collect()
    }
}

/// Runs `ẋ = Ax + u` with `u` interpolated linearly between grid samples.
pub fn propagate_forced(
    x0: &[f64],
    a: &SystemMatrix,
    control: &NoiseControl,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let n = a.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            found: x0.len(),
        });
    }
    if control.values.len() != grid.points() {
        return Err(Error::DimensionMismatch {
            what: "noise samples",
            expected: grid.points(),
            found: control.values.len(),
        });
    }
    if let Some(bad) = control.values.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "noise vector",
            expected: n,
            found: bad.len(),
        });
    }
    let stepper = ForcedStepper::new(a, grid.step());
    let eig = &stepper.eig;
    let modal_u: Vec<Vec<f64>> = control.values.iter().map(|u| eig.to_modal(u)).collect();
    let mut y = eig.to_modal(x0);
    let mut states = Vec::with_capacity(grid.points());
    let mut dense = Vec::with_capacity(4 * grid.steps());
    states.push(x0.to_vec());
    for k in 0..grid.steps() {
        let (v0, v1) = (&modal_u[k], &modal_u[k + 1]);
        for stage in 0..4 {
            dense.push(eig.from_modal(&stepper.advance_modal(&y, v0, v1, stage)));
        }
        y = stepper.advance_modal(&y, v0, v1, 4);
        states.push(eig.from_modal(&y));
    }
    Ok(Trajectory::new(*grid, states)?.with_dense(dense))
}

/// Multiplier of the power constraint, `λ = −uᵀp/(2P_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierReport {
    pub values: Vec<f64>,
    pub max_value: f64,
    /// Largest `|λ(|u|² − P_max)|`.
    pub max_slackness: f64,
}

impl MultiplierReport {
    /// Grid indices where `λ > tol` (wrong sign for a maximizer).
    pub fn sign_violations(&self, tol: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > tol)
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn lagrange_multiplier(
    control: &NoiseControl,
    p: &[Vec<f64>],
    p_max: f64,
) -> Result<MultiplierReport> {
    if control.values.len() != p.len() {
        return Err(Error::DimensionMismatch {
            what: "co-state samples",
            expected: control.values.len(),
            found: p.len(),
        });
    }
    if !(p_max > 0.0) {
        return Err(Error::InvalidParameter("power budget must be positive"));
    }
    let values: Vec<f64> = control
        .values
        .iter()
        .zip(p)
        .map(|(u, p)| -math::dot(u, p) / (2.0 * p_max))
        .collect();
    let max_value = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let max_slackness = values
        .iter()
        .enumerate()
        .map(|(k, l)| (l * (control.power(k) - p_max)).abs())
        .fold(0.0, f64::max);
    Ok(MultiplierReport {
        values,
        max_value,
        max_slackness,
    })
}

#[derive(Debug, Clone)]
pub struct Attack2Outcome {
    /// State trajectory under `u*`, with `p*` attached as co-state.
    pub trajectory: Trajectory,
    pub control: NoiseControl,
    pub costate: Vec<Vec<f64>>,
    pub objective: f64,
    /// `ν·J`, the quantity the co-state map is normalized against.
    pub scaled_objective: f64,
    pub setup: ContractionSetup,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub multipliers: MultiplierReport,
}

impl Attack2Outcome {
    pub fn contraction_ratios(&self) -> Vec<f64> {
        FixedPointOutcome {
            costate: Vec::new(),
            iterations: self.iterations,
            residuals: self.residuals.clone(),
            converged: self.converged,
        }
        .contraction_ratios()
    }
}

/// Resolves `ν` for a scenario.
pub fn setup_for(scenario: &Scenario, params: &NoiseParams) -> Result<ContractionSetup> {
    let profile = scenario.kernel_profile();
    match params.nu {
        NuChoice::Safety(f) => contraction_setup(&profile, params.p_max, f),
        NuChoice::Nu(nu) => contraction_setup_with_nu(&profile, params.p_max, nu),
    }
}

/// Solves for `p*`, builds `u*` and simulates it.
pub fn simulate_attack2(
    scenario: &Scenario,
    params: &NoiseParams,
    options: &FixedPointOptions,
) -> Result<Attack2Outcome> {
    let setup = setup_for(scenario, params)?;
    let profile = scenario.kernel_profile();
    let topology = &scenario.topology;
    let a = build_system_matrix(topology, &LinkControl::none(topology))?;
    let map = CostateMap::new(&a, &scenario.x0, &profile, &scenario.grid, &setup)?;
    let fp = costate_fixed_point(&map, options);
    let control = optimal_noise(&fp.costate, params.p_max);
    let trajectory = propagate_forced(&scenario.x0, &a, &control, &scenario.grid)?
        .with_costates(fp.costate.clone())?;
    let objective = objective(&trajectory, &scenario.kernel);
    let multipliers = lagrange_multiplier(&control, &fp.costate, params.p_max)?;
    Ok(Attack2Outcome {
        trajectory,
        control,
        costate: fp.costate,
        objective,
        scaled_objective: setup.nu * objective,
        setup,
        iterations: fp.iterations,
        residuals: fp.residuals,
        converged: fp.converged,
        multipliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Kernel, TimeGrid};
    use crate::link::tests::paper_scenario;
    use crate::model::NetworkTopology;
    use alloc::vec;

    #[test]
    fn paper_constants() {
        let grid = TimeGrid::new(2.0, 400).unwrap();
        let profile = Kernel::default().profile(&grid).unwrap();
        let s = contraction_setup(&profile, 1.0, 0.9).unwrap();
        assert!((s.nu_max - 0.125).abs() < 1e-12);
        assert!((s.nu - 0.1125).abs() < 1e-12);
        assert!((s.q - 0.9).abs() < 1e-12);
        let s4 = contraction_setup(&profile, 4.0, 0.9).unwrap();
        assert!((s4.nu_max - 0.0625).abs() < 1e-12);
        assert!(contraction_setup(&profile, 0.0, 0.9).is_err());
        assert!(contraction_setup(&profile, -1.0, 0.9).is_err());
        assert!(contraction_setup(&profile, 1.0, 1.0).is_err());
        assert!(contraction_setup_with_nu(&profile, 1.0, 0.125).is_err());
        assert!(contraction_setup_with_nu(&profile, 1.0, 0.05).is_ok());
    }

    #[test]
    fn phi_functions_match_quadrature() {
        for &l in &[-7.3, -1.0, -1e-3, 0.0, 1e-9, 0.4] {
            let s = 0.37;
            let m = 20000;
            let dr = s / m as f64;
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..m {
                let r = (i as f64 + 0.5) * dr;
                let e = libm::exp(l * (s - r));
                a += e * dr;
                b += e * r * dr;
            }
            assert!((phi1(l, s) - a).abs() < 1e-9, "{l}");
            assert!((phi2(l, s) - b).abs() < 1e-9, "{l}");
        }
    }

    #[test]
    fn forced_two_node_matches_closed_form() {
        // x(0) = (0, 2), u = (c, c): average moves as 1 + c t, gap decays as 2e^{−2t}
        let t = NetworkTopology::new(2, [(0, 1, 1.0)]).unwrap();
        let a = build_system_matrix(&t, &LinkControl::none(&t)).unwrap();
        let grid = TimeGrid::new(2.0, 37).unwrap();
        let u = NoiseControl::constant_full_power(2, 1.0, &grid);
        let c = u.values[0][0];
        let traj = propagate_forced(&[0.0, 2.0], &a, &u, &grid).unwrap();
        for (k, x) in traj.states().iter().enumerate() {
            let tk = grid.time(k);
            let gap = 2.0 * libm::exp(-2.0 * tk);
            assert!((x[0] - (1.0 + c * tk - gap / 2.0)).abs() < 1e-13);
            assert!((x[1] - (1.0 + c * tk + gap / 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn forced_linear_ramp_is_exact() {
        // A = 0 (single frozen pair) and u(t) = (t, −t): x = x0 + (t²/2, −t²/2)
        let t = NetworkTopology::new(2, [(0, 1, 1.0)]).unwrap();
        let broken = LinkControl::from_pairs(&t, &[(0, 1)], 1).unwrap();
        let a = build_system_matrix(&t, &broken).unwrap();
        let grid = TimeGrid::new(1.0, 5).unwrap();
        let values = grid.times().map(|s| vec![s, -s]).collect();
        let u = NoiseControl { values, p_max: 1.0 };
        let traj = propagate_forced(&[1.0, 1.0], &a, &u, &grid).unwrap();
        let x = traj.last();
        assert!((x[0] - 1.5).abs() < 1e-14 && (x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn optimal_noise_guards_singular_costate() {
        let p = vec![vec![3.0, 4.0], vec![1e-12, 0.0], vec![0.0, 0.0]];
        let u = optimal_noise(&p, 4.0);
        assert!((u.values[0][0] - 1.2).abs() < 1e-15 && (u.values[0][1] - 1.6).abs() < 1e-15);
        assert_eq!(u.values[1], vec![0.0, 0.0]);
        assert_eq!(u.values[2], vec![0.0, 0.0]);
        let zero = optimal_noise(&vec![vec![0.0; 3]; 4], 1.0);
        assert!(zero.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn paper_attack_runs_at_full_power_along_costate() {
        let s = paper_scenario(400);
        let out = simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default())
            .unwrap();
        assert!(out.converged, "{:?}", out.residuals);
        assert!(out.iterations <= 200);
        for r in out.contraction_ratios().iter().skip(1) {
            assert!(*r <= out.setup.q + 0.05, "{r}");
        }
        let peak = out.costate.iter().fold(0.0f64, |m, v| m.max(math::norm(v)));
        for (k, (u, p)) in out.control.values.iter().zip(&out.costate).enumerate() {
            let np = math::norm(p);
            if np > 1e-10 * peak {
                assert!((out.control.power(k) - 1.0).abs() < 1e-12);
                assert!((math::dot(u, p) - np).abs() < 1e-9 * np);
            }
        }
        assert!(out.multipliers.max_value <= 1e-12);
        assert!(out.multipliers.max_slackness <= 1e-8);
        let base = baseline_constant_control(&s, 1.0).unwrap();
        assert!(out.objective >= base.simulated * (1.0 - 1e-6), "{} {}", out.objective, base.simulated);
        let j = objective(&out.trajectory, &s.kernel);
        assert_eq!(j, out.objective);
    }

    #[test]
    fn fixed_point_defect_is_small() {
        let s = paper_scenario(200);
        let out = simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default())
            .unwrap();
        let a = build_system_matrix(&s.topology, &LinkControl::none(&s.topology)).unwrap();
        let map =
            CostateMap::new(&a, &s.x0, &s.kernel_profile(), &s.grid, &out.setup).unwrap();
        let image = map.apply(&out.costate);
        let defect = fixed_point::sup_distance(&image, &out.costate)
            / fixed_point::sup_norm(&out.costate);
        assert!(defect <= 1e-7, "{defect}");
    }

    #[test]
    fn costate_converges_at_second_order() {
        let base = paper_scenario(100);
        let p0 = |steps: usize| {
            let s = base.with_grid(TimeGrid::new(2.0, steps).unwrap()).unwrap();
            simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default())
                .unwrap()
                .costate[0]
                .clone()
        };
        let (a, b, c) = (p0(100), p0(200), p0(400));
        let d1 = math::norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        let d2 = math::norm(&b.iter().zip(&c).map(|(x, y)| x - y).collect::<Vec<_>>());
        let ratio = d1 / d2;
        assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
    }

    #[test]
    fn objective_is_scale_free_in_nu() {
        let s = paper_scenario(100);
        let a = simulate_attack2(&s, &NoiseParams::new(1.0), &FixedPointOptions::default())
            .unwrap();
        let params = NoiseParams {
            p_max: 1.0,
            nu: NuChoice::Nu(0.01),
        };
        let b = simulate_attack2(&s, &params, &FixedPointOptions::default()).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6 * a.objective);
    }
}
