use alloc::vec::Vec;

use crate::dynamics::{Kernel, KernelProfile, TimeGrid};
use crate::model::NetworkTopology;
use crate::{Error, Result};

/// Everything the attack engines need besides the adversary's own budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: NetworkTopology,
    pub x0: Vec<f64>,
    pub grid: TimeGrid,
    pub kernel: Kernel,
}

impl Scenario {
    pub fn new(
        topology: NetworkTopology,
        x0: Vec<f64>,
        grid: TimeGrid,
        kernel: Kernel,
    ) -> Result<Self> {
        if x0.len() != topology.nodes() {
            return Err(Error::DimensionMismatch {
                what: "initial state",
                expected: topology.nodes(),
                found: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite"));
        }
        kernel.profile(&grid)?;
        Ok(Scenario {
            topology,
            x0,
            grid,
            kernel,
        })
    }

    pub fn nodes(&self) -> usize {
        self.topology.nodes()
    }

    pub fn kernel_profile(&self) -> KernelProfile {
        self.kernel
            .profile(&self.grid)
            .expect("kernel validated at construction")
    }

    /// Same scenario started from `c·x0`.
    pub fn with_scaled_state(&self, c: f64) -> Self {
        Scenario {
            x0: self.x0.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn with_state(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.topology.clone(), x0, self.grid, self.kernel.clone())
    }

    pub fn with_grid(&self, grid: TimeGrid) -> Result<Self> {
        Self::new(self.topology.clone(), self.x0.clone(), grid, self.kernel.clone())
    }
}
