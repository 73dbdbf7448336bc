use alloc::vec;
use alloc::vec::Vec;

use super::ContractionSetup;
use crate::dynamics::{KernelProfile, TimeGrid};
use crate::linalg::SymmetricEigen;
use crate::math;
use crate::model::SystemMatrix;
use crate::{Error, Result};

/// The co-state map `p ↦ g + 2ν√P_max ∫_t^T ∫_0^τ k(τ) P(2τ − t − s) p̄(s) ds dτ`
/// discretized on a grid.
///
/// Both integrals use the composite trapezoid rule on the grid. Working in
/// the eigenbasis of `A`, `P(2τ − t − s) = e^{Λ(τ−t)} e^{Λ(τ−s)}` factorizes,
/// so the double sum is evaluated with one forward and one backward
/// recursion per mode. The result equals the O(steps²) double trapezoid sum
/// at O(steps) cost.
#[derive(Debug, Clone)]
pub struct CostateMap {
    eig: SymmetricEigen,
    grid: TimeGrid,
    kernel: Vec<f64>,
    step_decay: Vec<f64>,
    // g in modal coordinates, one row per grid point
    forcing: Vec<Vec<f64>>,
    gain: f64,
}

impl CostateMap {
    pub fn new(
        a: &SystemMatrix,
        x0: &[f64],
        profile: &KernelProfile,
        grid: &TimeGrid,
        setup: &ContractionSetup,
    ) -> Result<Self> {
        let n = a.dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "initial state",
                expected: n,
                found: x0.len(),
            });
        }
        if profile.values.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                what: "kernel samples",
                expected: grid.points(),
                found: profile.values.len(),
            });
        }
        let eig = SymmetricEigen::new(a.matrix());
        let h = grid.step();
        let step_decay: Vec<f64> = eig.values.iter().map(|&l| math::exp(l * h)).collect();

        // P(τ)x0 − x̄ in modal coordinates: e^{λτ} a_m − b_m.
        let avg = x0.iter().sum::<f64>() / n as f64;
        let a_modal = eig.to_modal(x0);
        let b_modal = eig.to_modal(&vec![avg; n]);
        let driven: Vec<Vec<f64>> = grid
            .times()
            .zip(&profile.values)
            .map(|(t, k)| {
                (0..n)
                    .map(|m| k * (math::exp(eig.values[m] * t) * a_modal[m] - b_modal[m]))
                    .collect()
            })
            .collect();
        let scale = 2.0 * setup.nu;
        let forcing = backward_tail(&driven, &step_decay, h)
            .into_iter()
            .map(|row| row.into_iter().map(|v| scale * v).collect())
            .collect();

        Ok(CostateMap {
            eig,
            grid: *grid,
            kernel: profile.values.clone(),
            step_decay,
            forcing,
            gain: 2.0 * setup.nu * math::sqrt(setup.p_max),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `g(t_k)` in node coordinates.
    pub fn forcing(&self) -> Vec<Vec<f64>> {
        self.forcing.iter().map(|y| self.eig.from_modal(y)).collect()
    }

    /// One application of the map to a co-state trace (node coordinates).
    pub fn apply(&self, p: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let directions: Vec<Vec<f64>> = p.iter().map(|v| self.eig.to_modal(&unit(v))).collect();
        self.apply_modal_directions(&directions)
    }

    /// The map evaluated with `p̄ ≡ 1/√n`: the co-state induced by the
    /// full-power constant control `√(P_max/n)·1`.
    pub fn full_power_baseline(&self) -> Vec<Vec<f64>> {
        let n = self.eig.dim();
        let ones = vec![1.0 / math::sqrt(n as f64); n];
        let modal = self.eig.to_modal(&ones);
        self.apply_modal_directions(&vec![modal; self.grid.points()])
    }

    fn apply_modal_directions(&self, q: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.grid.step();
        let n = self.eig.dim();
        // inner: I(τ_j) = ∫_0^{τ_j} e^{λ(τ_j − s)} q(s) ds
        let mut inner = vec![vec![0.0; n]; q.len()];
        for j in 0..q.len() - 1 {
            for m in 0..n {
                let d = self.step_decay[m];
                inner[j + 1][m] = d * inner[j][m] + 0.5 * h * (d * q[j][m] + q[j + 1][m]);
            }
        }
        let weighted: Vec<Vec<f64>> = inner
            .iter()
            .zip(&self.kernel)
            .map(|(row, k)| row.iter().map(|v| k * v).collect())
            .collect();
        let outer = backward_tail(&weighted, &self.step_decay, h);
        outer
            .iter()
            .zip(&self.forcing)
            .map(|(o, g)| {
                let modal: Vec<f64> = o.iter().zip(g).map(|(o, g)| g + self.gain * o).collect();
                self.eig.from_modal(&modal)
            })
            .collect()
    }
}

// O_i = ∫_{t_i}^T e^{λ(τ − t_i)} F(τ) dτ, trapezoid on the grid, per mode.
fn backward_tail(f: &[Vec<f64>], decay: &[f64], h: f64) -> Vec<Vec<f64>> {
    let points = f.len();
    let n = decay.len();
    let mut out = vec![vec![0.0; n]; points];
    for i in (0..points - 1).rev() {
        for m in 0..n {
            let d = decay[m];
            out[i][m] = d * out[i + 1][m] + 0.5 * h * (f[i][m] + d * f[i + 1][m]);
        }
    }
    out
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = math::norm(v);
    if norm > 0.0 && norm.is_finite() {
        v.iter().map(|x| x / norm).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// `g(t) = 2ν ∫_t^T P(τ − t) k(τ) (P(τ)x0 − x̄) dτ` on the grid.
pub fn g_term(
    a: &SystemMatrix,
    x0: &[f64],
    profile: &KernelProfile,
    nu: f64,
    grid: &TimeGrid,
) -> Result<Vec<Vec<f64>>> {
    let setup = ContractionSetup {
        nu,
        nu_max: f64::INFINITY,
        q: 0.0,
        kernel_sup: profile.sup_time_weighted,
        kernel_tail: profile.sup_tail_moment,
        p_max: 1.0,
    };
    Ok(CostateMap::new(a, x0, profile, grid, &setup)?.forcing())
}

/// Where the fixed-point iteration starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostateStart {
    /// Co-state of the full-power constant control `√(P_max/n)·1`.
    #[default]
    FullPowerBaseline,
    /// `p₀ = g`. The iteration never leaves the disagreement subspace from
    /// here, so it can settle on a stationary point that ignores the
    /// consensus direction.
    ForcingTerm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub max_iter: usize,
    /// Stop once `‖p_{k+1} − p_k‖_∞ ≤ tolerance·‖p_k‖_∞`.
    pub tolerance: f64,
    pub start: CostateStart,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            max_iter: 200,
            tolerance: 1e-8,
            start: CostateStart::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOutcome {
    pub costate: Vec<Vec<f64>>,
    /// Number of map applications after the start point.
    pub iterations: usize,
    /// `‖p_{k+1} − p_k‖_∞` for each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl FixedPointOutcome {
    /// Successive residual ratios `r_{k+1}/r_k`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

pub(crate) fn sup_norm(p: &[Vec<f64>]) -> f64 {
    p.iter().fold(0.0, |m, v| m.max(math::max_abs(v)))
}

pub(crate) fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        x.iter().zip(y).fold(m, |m, (u, v)| m.max((u - v).abs()))
    })
}

/// Picard iteration `p_{k+1} = T(p_k)` until the relative sup-norm step
/// falls below the tolerance.
pub fn costate_fixed_point(map: &CostateMap, options: &FixedPointOptions) -> FixedPointOutcome {
    let mut p = match options.start {
        CostateStart::FullPowerBaseline => map.full_power_baseline(),
        CostateStart::ForcingTerm => map.forcing(),
    };
    let mut residuals = Vec::new();
    for iteration in 1..=options.max_iter {
        let next = map.apply(&p);
        let r = sup_distance(&next, &p);
        let scale = sup_norm(&p);
        residuals.push(r);
        p = next;
        if r <= options.tolerance * scale {
            return FixedPointOutcome {
                costate: p,
                iterations: iteration,
                residuals,
                converged: true,
            };
        }
    }
    FixedPointOutcome {
        costate: p,
        iterations: options.max_iter,
        residuals,
        converged: false,
    }
}
