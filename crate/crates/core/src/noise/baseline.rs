use super::{propagate_forced, NoiseControl};
use crate::dynamics::objective;
use crate::linalg::SymmetricEigen;
use crate::math::{self, GAUSS_4};
use crate::model::{build_system_matrix, LinkControl};
use crate::{Error, Result, Scenario};

/// The constant full-power signal `u = √(P_max/n)·1` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineReport {
    /// `J` of the simulated trajectory.
    pub simulated: f64,
    /// `∫ k(t)[x0ᵀ e^{2At}(x0 − x̄) + P_max t²] dt`.
    pub closed_form: f64,
    /// `P_max ∫ k(t) t² dt` (equals `P_max T³/3` for `k ≡ 1`).
    pub lower_bound: f64,
}

impl BaselineReport {
    pub fn relative_gap(&self) -> f64 {
        (self.simulated - self.closed_form).abs() / self.closed_form.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn baseline_constant_control(scenario: &Scenario, p_max: f64) -> Result<BaselineReport> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidParameter("power budget must be positive"));
    }
    let topology = &scenario.topology;
    let grid = &scenario.grid;
    let n = scenario.nodes();
    let a = build_system_matrix(topology, &LinkControl::none(topology))?;
    let control = NoiseControl::constant_full_power(n, p_max, grid);
    let traj = propagate_forced(&scenario.x0, &a, &control, grid)?;
    let simulated = objective(&traj, &scenario.kernel);

    let eig = SymmetricEigen::new(a.matrix());
    let avg = scenario.x0.iter().sum::<f64>() / n as f64;
    let e0: alloc::vec::Vec<f64> = scenario.x0.iter().map(|v| v - avg).collect();
    let left = eig.to_modal(&scenario.x0);
    let right = eig.to_modal(&e0);
    let h = grid.step();
    let (mut closed_form, mut lower_bound) = (0.0, 0.0);
    for k in 0..grid.steps() {
        let t0 = grid.time(k);
        for &(s, w) in &GAUSS_4 {
            let t = t0 + s * h;
            let kt = scenario.kernel.eval(t);
            let decay: f64 = (0..n)
                .map(|m| math::exp(2.0 * eig.values[m] * t) * left[m] * right[m])
                .sum();
            closed_form += h * w * kt * (decay + p_max * t * t);
            lower_bound += h * w * kt * p_max * t * t;
        }
    }
    Ok(BaselineReport {
        simulated,
        closed_form,
        lower_bound,
    })
}
