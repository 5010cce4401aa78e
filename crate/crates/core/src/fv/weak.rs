//! Defects of the weak continuity and momentum identities.
//!
//! For a test function `phi` with compact temporal support the defect is the
//! left side minus the right side of
//! `int_0^tau int [rho phi_t + m . grad phi] = int rho(tau) phi(tau) - int rho_0 phi(0)`
//! and of its momentum analogue. Space integrals are midpoint sums, time
//! integrals the trapezoid rule over stored snapshots.

use rayon::prelude::*;
use serde::Serialize;

use super::basis::TestFunctionBasis;
use crate::error::{Error, Result};
use crate::fields::{FluidState, PressureLaw, TorusGrid, Trajectory};

/// Fields entering the weak identities at one time stamp.
///
/// For a weak solution `convection = m (x) m / rho` and `pressure = p(rho)`;
/// measure-valued solutions put Young-measure moments plus defects here.
#[derive(Debug, Clone)]
pub struct WeakFields {
    pub time: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<Vec<f64>>,
    /// `convection[i][j][cell]`
    pub convection: Vec<Vec<Vec<f64>>>,
    pub pressure: Vec<f64>,
}

impl WeakFields {
    pub fn from_state(law: &PressureLaw, state: &FluidState) -> Self {
        let dim = state.dim();
        let n = state.len();
        let mut convection = vec![vec![vec![0.0; n]; dim]; dim];
        for c in 0..n {
            let r = state.rho[c];
            for i in 0..dim {
                for j in 0..dim {
                    convection[i][j][c] = if r > 0.0 { state.momentum[i][c] * state.momentum[j][c] / r } else { 0.0 };
                }
            }
        }
        Self {
            time: state.time,
            rho: state.rho.clone(),
            momentum: state.momentum.clone(),
            convection,
            pressure: state.rho.iter().map(|&r| law.p(r)).collect(),
        }
    }

    fn lerp(&self, other: &WeakFields, lambda: f64) -> WeakFields {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
        };
        WeakFields {
            time: (1.0 - lambda) * self.time + lambda * other.time,
            rho: mix(&self.rho, &other.rho),
            momentum: self.momentum.iter().zip(&other.momentum).map(|(a, b)| mix(a, b)).collect(),
            convection: self
                .convection
                .iter()
                .zip(&other.convection)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| mix(a, b)).collect())
                .collect(),
            pressure: mix(&self.pressure, &other.pressure),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPair {
    pub continuity: f64,
    /// One entry per momentum component (test function `psi e_j`).
    pub momentum: Vec<f64>,
}

impl ResidualPair {
    pub fn max_abs(&self) -> f64 {
        self.momentum.iter().fold(self.continuity.abs(), |a, m| a.max(m.abs()))
    }
}

/// Largest absolute defect over a residual table.
pub fn max_abs_residual(table: &[ResidualPair]) -> f64 {
    table.iter().map(ResidualPair::max_abs).fold(0.0, f64::max)
}

/// Weak-form defects for a trajectory at time `tau`.
pub fn weak_residual(traj: &Trajectory, basis: &TestFunctionBasis, tau: f64) -> Result<Vec<ResidualPair>> {
    let snaps: Vec<WeakFields> = traj.states.iter().map(|s| WeakFields::from_state(&traj.law, s)).collect();
    let initial = WeakFields::from_state(&traj.law, &traj.initial);
    weak_defects(&traj.grid, &initial, &snaps, basis, tau)
}

/// Shared core of the weak and measure-valued residuals.
pub fn weak_defects(
    grid: &TorusGrid,
    initial: &WeakFields,
    snapshots: &[WeakFields],
    basis: &TestFunctionBasis,
    tau: f64,
) -> Result<Vec<ResidualPair>> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots".into()));
    }
    let (start, end) = (snapshots[0].time, snapshots[snapshots.len() - 1].time);
    let slack = 1e-12 * (end - start).abs().max(1.0);
    if !(tau >= start - slack && tau <= end + slack) {
        return Err(Error::OutOfRange { tau, start, end });
    }
    // snapshots up to tau, closing with the interpolated state at tau
    let k = snapshots.partition_point(|s| s.time <= tau + slack);
    let mut used: Vec<WeakFields> = snapshots[..k].to_vec();
    let last_time = used.last().map(|s| s.time).unwrap_or(start);
    if (last_time - tau).abs() > slack && k < snapshots.len() {
        let (a, b) = (&snapshots[k - 1], &snapshots[k]);
        let mut mid = a.lerp(b, (tau - a.time) / (b.time - a.time));
        mid.time = tau;
        used.push(mid);
    }
    let dim = grid.dim();
    let n = grid.len();
    let vol = grid.cell_volume();
    let coords: Vec<[f64; 3]> = (0..n).map(|c| grid.coords(c)).collect();

    let table = basis
        .members()
        .par_iter()
        .map(|f| {
            let mut psi = vec![0.0; n];
            let mut grad = vec![[0.0; 3]; n];
            for c in 0..n {
                let (v, g) = basis.spatial(f, &coords[c]);
                psi[c] = v;
                grad[c] = g;
            }
            // space integrals of the volume terms at each stamp
            let integrand = |w: &WeakFields| -> (f64, Vec<f64>) {
                let th = f.bump.value(w.time);
                let dth = f.bump.derivative(w.time);
                let mut cont = 0.0;
                let mut mom = vec![0.0; dim];
                for c in 0..n {
                    let mut div_flux = 0.0;
                    for i in 0..dim {
                        div_flux += w.momentum[i][c] * grad[c][i];
                    }
                    cont += w.rho[c] * dth * psi[c] + th * div_flux;
                    for (j, mj) in mom.iter_mut().enumerate() {
                        let mut conv = 0.0;
                        for i in 0..dim {
                            conv += w.convection[i][j][c] * grad[c][i];
                        }
                        *mj += w.momentum[j][c] * dth * psi[c] + th * (conv + w.pressure[c] * grad[c][j]);
                    }
                }
                (cont * vol, mom.into_iter().map(|m| m * vol).collect())
            };
            let values: Vec<(f64, Vec<f64>)> = used.iter().map(integrand).collect();
            let mut cont = 0.0;
            let mut mom = vec![0.0; dim];
            for s in 1..used.len() {
                let dt = used[s].time - used[s - 1].time;
                cont += 0.5 * dt * (values[s].0 + values[s - 1].0);
                for j in 0..dim {
                    mom[j] += 0.5 * dt * (values[s].1[j] + values[s - 1].1[j]);
                }
            }
            let last = used.last().unwrap();
            let (th_tau, th_0) = (f.bump.value(last.time), f.bump.value(start));
            let mut rhs_cont = 0.0;
            let mut rhs_mom = vec![0.0; dim];
            for c in 0..n {
                rhs_cont += (last.rho[c] * th_tau - initial.rho[c] * th_0) * psi[c];
                for j in 0..dim {
                    rhs_mom[j] += (last.momentum[j][c] * th_tau - initial.momentum[j][c] * th_0) * psi[c];
                }
            }
            ResidualPair {
                continuity: cont - rhs_cont * vol,
                momentum: mom.iter().zip(&rhs_mom).map(|(l, r)| l - r * vol).collect(),
            }
        })
        .collect();
    Ok(table)
}
