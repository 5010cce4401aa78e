use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{integrate, FluidState, PressureLaw, TorusGrid};

/// Reference fields `r` and `U` at one instant; `velocity[d][cell]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFields {
    pub r: Vec<f64>,
    pub velocity: Vec<Vec<f64>>,
}

impl ReferenceFields {
    pub fn new(r: Vec<f64>, velocity: Vec<Vec<f64>>) -> Result<Self> {
        if velocity.iter().any(|u| u.len() != r.len()) {
            return Err(Error::Misaligned("velocity and density lengths differ".into()));
        }
        if let Some((cell, v)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Domain(format!("reference density {v} in cell {cell} must be positive")));
        }
        Ok(Self { r, velocity })
    }

    /// `r = rho`, `U = m / rho` of a state without vacuum.
    pub fn from_state(state: &FluidState) -> Result<Self> {
        let velocity = state
            .momentum
            .iter()
            .map(|m| m.iter().zip(&state.rho).map(|(m, r)| m / r).collect())
            .collect();
        Self::new(state.rho.clone(), velocity)
    }

    pub fn dim(&self) -> usize {
        self.velocity.len()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn velocity_at(&self, cell: usize) -> [f64; 3] {
        let mut u = [0.0; 3];
        for (d, c) in self.velocity.iter().enumerate() {
            u[d] = c[cell];
        }
        u
    }
}

/// `1/2 rho |m/rho - U|^2 + P(rho) - P'(r)(rho - r) - P(r)` at one point.
///
/// The kinetic part is evaluated as `|m|^2 / (2 rho) - m.U + rho |U|^2 / 2`,
/// which is `rho |U|^2 / 2 = 0` in vacuum.
pub fn rel_energy_density(law: &PressureLaw, rho: f64, m: &[f64], r: f64, u: &[f64]) -> f64 {
    let mut m2 = 0.0;
    let mut mu = 0.0;
    let mut u2 = 0.0;
    for (mi, ui) in m.iter().zip(u) {
        m2 += mi * mi;
        mu += mi * ui;
        u2 += ui * ui;
    }
    let kinetic = if rho > 0.0 {
        // exact-cancellation friendly form
        let mut s = 0.0;
        for (mi, ui) in m.iter().zip(u) {
            let w = mi / rho - ui;
            s += w * w;
        }
        0.5 * rho * s
    } else if m2 == 0.0 {
        0.0
    } else {
        0.5 * m2 / rho - mu + 0.5 * rho * u2
    };
    kinetic + law.potential_bregman(rho, r)
}

#[derive(Debug, Clone, Serialize)]
pub struct RelEnergy {
    pub density: Vec<f64>,
    pub integral: f64,
}

/// Pointwise relative energy of a state with respect to `(r, U)` and its midpoint integral.
pub fn rel_energy(grid: &TorusGrid, law: &PressureLaw, state: &FluidState, reference: &ReferenceFields) -> Result<RelEnergy> {
    if state.len() != reference.len() || state.dim() != reference.dim() {
        return Err(Error::Misaligned("state and reference shapes differ".into()));
    }
    let dim = state.dim();
    let density: Vec<f64> = (0..state.len())
        .into_par_iter()
        .map(|c| {
            let m = state.momentum_at(c);
            let u = reference.velocity_at(c);
            rel_energy_density(law, state.rho[c], &m[..dim], reference.r[c], &u[..dim])
        })
        .collect();
    let integral = integrate(grid, &density);
    Ok(RelEnergy { density, integral })
}

/// `E - int m.U + 1/2 int rho |U|^2 - int P'(r) rho + int p(r)`.
pub fn rel_energy_dissipative(
    grid: &TorusGrid,
    law: &PressureLaw,
    rho: &[f64],
    momentum: &[Vec<f64>],
    energy: f64,
    reference: &ReferenceFields,
) -> f64 {
    let n = rho.len();
    let dim = momentum.len();
    let mut sum = 0.0;
    for c in 0..n {
        let mut mu = 0.0;
        let mut u2 = 0.0;
        for d in 0..dim {
            let u = reference.velocity[d][c];
            mu += momentum[d][c] * u;
            u2 += u * u;
        }
        let r = reference.r[c];
        sum += -mu + 0.5 * rho[c] * u2 - law.potential_prime(r) * rho[c] + law.p(r);
    }
    energy + sum * grid.cell_volume()
}
