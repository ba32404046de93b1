use serde::{Deserialize, Serialize};

use crate::geometry::Domain;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LloydMode {
    /// Positions move to centroids, weights to `−f′(m)`.
    #[default]
    Generalized,
    /// Positions move to centroids, weights stay zero.
    ClassicalCvt,
}

/// Stopping rules and numerical knobs for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LloydConfig {
    pub mode: LloydMode,
    /// Converged once every generator moves less than this.
    pub tol_position: f64,
    /// ...and every weight, after removing the mean shift, moves less than this.
    pub tol_weight: f64,
    /// Stop as stalled once `|E_n − E_{n+1}| ≤ tol_energy·|E₀|`; 0 disables.
    pub tol_energy: f64,
    pub max_iterations: usize,
    /// Cells with mass below `mass_floor·∫ρ` are eliminated.
    pub mass_floor: f64,
    pub seed: u64,
    /// Keep every iterate's generators in the trace.
    pub record_states: bool,
}

impl Default for LloydConfig {
    fn default() -> Self {
        Self {
            mode: LloydMode::Generalized,
            tol_position: 1e-10,
            tol_weight: 1e-10,
            tol_energy: 1e-14,
            max_iterations: 20_000,
            mass_floor: 1e-12,
            seed: 0,
            record_states: false,
        }
    }
}

impl LloydConfig {
    /// Tolerances scaled to the domain: `1e-10·diam` and `1e-10·diam²`.
    pub fn for_domain(domain: &Domain) -> Self {
        let d = domain.diameter();
        Self {
            tol_position: 1e-10 * d,
            tol_weight: 1e-10 * d * d,
            ..Self::default()
        }
    }

    pub fn classical(mut self) -> Self {
        self.mode = LloydMode::ClassicalCvt;
        self
    }

    pub fn without_energy_stop(mut self) -> Self {
        self.tol_energy = 0.0;
        self
    }
}
