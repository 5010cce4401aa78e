use serde::Serialize;

use crate::fields::{total_energy, Trajectory};

/// Energy series of a trajectory and its admissibility verdict.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyMonitor {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub initial_energy: f64,
    pub tolerance: f64,
    /// First snapshot index at which the energy rose, if any.
    pub first_violation: Option<usize>,
    pub pass: bool,
}

/// Relative tolerance on energy increments.
pub const ENERGY_TOLERANCE: f64 = 1e-10;

pub fn energy_monitor(traj: &Trajectory) -> EnergyMonitor {
    let e0 = total_energy(&traj.grid, &traj.law, &traj.initial);
    let energies: Vec<f64> = traj.states.iter().map(|s| total_energy(&traj.grid, &traj.law, s)).collect();
    let tol = ENERGY_TOLERANCE * e0.abs();
    let mut first_violation = None;
    for (i, &e) in energies.iter().enumerate() {
        let rises = i > 0 && e > energies[i - 1] + tol;
        if !e.is_finite() || rises || e > e0 + tol {
            first_violation = Some(i);
            break;
        }
    }
    EnergyMonitor {
        times: traj.times(),
        energies,
        initial_energy: e0,
        tolerance: tol,
        first_violation,
        pass: first_violation.is_none() && e0.is_finite(),
    }
}
