use serde::Serialize;

use super::defects::DefectMeasures;
use super::measure::{observables, YoungMeasure};
use crate::error::{Error, Result};
use crate::fields::{integrate, FluidState, PressureLaw, TorusGrid, Trajectory};

/// Young measure and concentration defects at one time stamp.
#[derive(Debug, Clone, PartialEq)]
pub struct MvsSnapshot {
    pub time: f64,
    pub measure: YoungMeasure,
    pub defects: DefectMeasures,
}

impl MvsSnapshot {
    pub fn barycenter(&self) -> FluidState {
        self.measure.barycenter_state(self.time)
    }
}

/// Dissipative measure-valued solution on a torus.
///
/// `initial_energy` is `E(0-)` and is kept apart from the energy of the
/// first snapshot.
#[derive(Debug, Clone)]
pub struct DissipativeSolution {
    pub grid: TorusGrid,
    pub law: PressureLaw,
    pub initial: MvsSnapshot,
    pub initial_energy: f64,
    pub snapshots: Vec<MvsSnapshot>,
}

impl DissipativeSolution {
    pub fn new(grid: TorusGrid, law: PressureLaw, initial: MvsSnapshot, initial_energy: f64, snapshots: Vec<MvsSnapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InsufficientData("dissipative solution without snapshots".into()));
        }
        if snapshots.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Misaligned("time stamps must increase strictly".into()));
        }
        for s in std::iter::once(&initial).chain(&snapshots) {
            if s.measure.len() != grid.len() || s.defects.len() != grid.len() || s.measure.dim != grid.dim() || s.defects.directions.dim != grid.dim() {
                return Err(Error::InvalidGrid(format!("snapshot at t = {} does not match the grid", s.time)));
            }
        }
        Ok(Self { grid, law, initial, initial_energy, snapshots })
    }

    /// Dirac measures at the states of a trajectory, no defects, `E(0-)` the initial energy.
    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        let zero = DefectMeasures::zero(traj.grid.dim(), traj.grid.len(), traj.law.gamma)?;
        let snap = |s: &FluidState| MvsSnapshot { time: s.time, measure: YoungMeasure::dirac(s), defects: zero.clone() };
        let initial = snap(&traj.initial);
        let e0 = crate::fields::total_energy(&traj.grid, &traj.law, &traj.initial);
        Self::new(traj.grid.clone(), traj.law, initial, e0, traj.states.iter().map(snap).collect())
    }

    /// `lambda delta_{a} + (1 - lambda) delta_{b}` stamp by stamp, no defects.
    pub fn mixture(a: &Trajectory, b: &Trajectory, lambda: &[f64]) -> Result<Self> {
        if a.grid != b.grid || a.law != b.law || a.states.len() != b.states.len() {
            return Err(Error::Misaligned("mixture components must share grid, law and stamps".into()));
        }
        if a.states.iter().zip(&b.states).any(|(x, y)| (x.time - y.time).abs() > 1e-12 * x.time.abs().max(1.0)) {
            return Err(Error::Misaligned("mixture components have different stamps".into()));
        }
        let zero = DefectMeasures::zero(a.grid.dim(), a.grid.len(), a.law.gamma)?;
        let snap = |x: &FluidState, y: &FluidState| -> Result<MvsSnapshot> {
            Ok(MvsSnapshot { time: x.time, measure: YoungMeasure::mixture(x, y, lambda)?, defects: zero.clone() })
        };
        let initial = snap(&a.initial, &b.initial)?;
        let snapshots = a.states.iter().zip(&b.states).map(|(x, y)| snap(x, y)).collect::<Result<Vec<_>>>()?;
        let mut sol = Self::new(a.grid.clone(), a.law, initial, 0.0, snapshots)?;
        sol.initial_energy = sol.energy_of(&sol.initial)?;
        Ok(sol)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Weights, atom signs and the defect algebra of every snapshot.
    pub fn validate(&self) -> Result<()> {
        for s in std::iter::once(&self.initial).chain(&self.snapshots) {
            s.measure.validate()?;
            s.defects.check_algebra(self.law.gamma)?;
        }
        Ok(())
    }

    /// Barycenters as a trajectory.
    pub fn barycenter_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.grid.clone(), self.law, self.initial.barycenter(), self.snapshots.iter().map(MvsSnapshot::barycenter).collect())
    }

    /// `int <V; 1/2 |m|^2/rho + P(rho)> + int dC_kin + int dC_int`.
    pub fn energy_of(&self, snap: &MvsSnapshot) -> Result<f64> {
        let young = snap.measure.moment(observables::energy(&self.law))?;
        let density: Vec<f64> = (0..young.len()).map(|c| young[c] + snap.defects.c_kin[c] + snap.defects.c_int[c]).collect();
        Ok(integrate(&self.grid, &density))
    }

    /// Largest `L^1` distance between consecutive barycenters.
    pub fn max_step_l1(&self) -> f64 {
        let bary: Vec<FluidState> = std::iter::once(&self.initial).chain(&self.snapshots).map(MvsSnapshot::barycenter).collect();
        bary.windows(2)
            .map(|w| {
                let diff: Vec<f64> = (0..w[0].len())
                    .map(|c| (w[1].rho[c] - w[0].rho[c]).abs() + (0..w[0].dim()).map(|d| (w[1].momentum[d][c] - w[0].momentum[d][c]).abs()).sum::<f64>())
                    .collect();
                integrate(&self.grid, &diff)
            })
            .fold(0.0, f64::max)
    }
}

/// Energy series with its monotonicity verdict.
#[derive(Debug, Clone, Serialize)]
pub struct DissipativeEnergy {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub initial_energy: f64,
    /// Largest increase, counting `E(0-)` as the first value.
    pub worst_rise: f64,
    pub first_violation: Option<usize>,
    pub non_increasing: bool,
}

/// Relative tolerance on energy increments.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

pub fn dissipative_energy(sol: &DissipativeSolution) -> Result<DissipativeEnergy> {
    sol.validate()?;
    let energy = sol.snapshots.iter().map(|s| sol.energy_of(s)).collect::<Result<Vec<f64>>>()?;
    let tol = MONOTONE_TOLERANCE * sol.initial_energy.abs().max(1.0);
    let mut prev = sol.initial_energy;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut first_violation = None;
    for (k, &e) in energy.iter().enumerate() {
        worst_rise = worst_rise.max(e - prev);
        if (!(e <= prev + tol)) && first_violation.is_none() {
            first_violation = Some(k);
        }
        prev = e;
    }
    Ok(DissipativeEnergy {
        times: sol.times(),
        energy,
        initial_energy: sol.initial_energy,
        worst_rise,
        non_increasing: first_violation.is_none(),
        first_violation,
    })
}
