//! Embedding Riemann-type far-field data into a torus.
//!
//! A profile that is constant outside `[-M, M]` is extended to `[-K, K)`:
//! the right far field is kept up to `K - blend`, then a quintic
//! smootherstep in the Riemann invariants leads back to the left far field
//! at the seam `x = K ~ -K`. The periodic data is evolved classically on a
//! short interval `[0, eps]` and rescaled to `[0, T]` by `x -> x T / eps`.

use serde::Serialize;

use super::classical::{solve_characteristics, Boundary, Breakdown, CharacteristicOptions, InvariantProfile};
use super::exact::{riemann_invariants, state_from_invariants, RiemannData};
use crate::error::{Error, Result};
use crate::fields::{uniform_times, FluidState, PressureLaw, TorusGrid, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionSpec {
    /// `M`: the profile is constant outside `[-M, M]`.
    pub radius: f64,
    /// `K`: torus half-length.
    pub half_length: f64,
    /// `T`: target horizon after rescaling.
    pub horizon: f64,
    pub blend_width: f64,
}

impl ExtensionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, constraint: String| Err(Error::InvalidParameter { name, constraint });
        if !(self.radius > 0.0) {
            return bad("radius", format!("M = {} must be positive", self.radius));
        }
        if !(self.half_length > self.radius) {
            return bad("half_length", format!("K = {} must exceed M = {}", self.half_length, self.radius));
        }
        if !(self.horizon > 0.0) {
            return bad("horizon", format!("T = {} must be positive", self.horizon));
        }
        if !(self.blend_width > 0.0 && self.blend_width < self.half_length - self.radius) {
            return bad("blend_width", format!("{} not in (0, K - M = {})", self.blend_width, self.half_length - self.radius));
        }
        Ok(())
    }
}

/// `10 s^3 - 15 s^4 + 6 s^5` on `[0, 1]`, clamped outside: C^2 with flat ends.
pub fn smootherstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Invariants blended from `from` (at `s = 0`) to `to` (at `s = 1`).
pub fn blend_invariants(from: (f64, f64), to: (f64, f64), s: f64) -> (f64, f64) {
    let q = smootherstep(s);
    (from.0 + q * (to.0 - from.0), from.1 + q * (to.1 - from.1))
}

/// C^1 Riemann profile: the jump at 0 is replaced by a smootherstep in the invariants over `[-M, M]`.
pub fn smooth_riemann_profile(law: &PressureLaw, data: &RiemannData, radius: f64) -> Result<impl Fn(f64) -> (f64, f64)> {
    let left = riemann_invariants(law, data.rho_l, data.u_l)?;
    let right = riemann_invariants(law, data.rho_r, data.u_r)?;
    let law = *law;
    Ok(move |x: f64| {
        let (wm, wp) = blend_invariants(left, right, (x + radius) / (2.0 * radius));
        state_from_invariants(&law, wm, wp).expect("blend of non-vacuum invariants")
    })
}

/// The periodic extension of a profile; `state(x)` for `x` in `[-K, K)`.
pub struct PeriodicExtension<'a> {
    pub law: PressureLaw,
    pub spec: ExtensionSpec,
    left: (f64, f64),
    right: (f64, f64),
    profile: &'a dyn Fn(f64) -> (f64, f64),
}

impl<'a> PeriodicExtension<'a> {
    pub fn new(law: &PressureLaw, spec: &ExtensionSpec, profile: &'a dyn Fn(f64) -> (f64, f64)) -> Result<Self> {
        spec.validate()?;
        let (rl, ul) = profile(-spec.radius);
        let (rr, ur) = profile(spec.radius);
        Ok(Self {
            law: *law,
            spec: *spec,
            left: riemann_invariants(law, rl, ul)?,
            right: riemann_invariants(law, rr, ur)?,
            profile,
        })
    }

    /// Invariants at `x`, wrapped to `[-K, K)`.
    pub fn invariants(&self, x: f64) -> (f64, f64) {
        let k = self.spec.half_length;
        let x = (x + k).rem_euclid(2.0 * k) - k;
        let (m, b) = (self.spec.radius, self.spec.blend_width);
        if x < -m {
            self.left
        } else if x <= m {
            let (r, u) = (self.profile)(x);
            riemann_invariants(&self.law, r, u).expect("profile density is positive")
        } else if x < k - b {
            self.right
        } else {
            blend_invariants(self.right, self.left, (x - (k - b)) / b)
        }
    }

    pub fn state(&self, x: f64) -> (f64, f64) {
        let (wm, wp) = self.invariants(x);
        state_from_invariants(&self.law, wm, wp).expect("non-vacuum extension")
    }

    /// Points where the piecewise definition switches.
    pub fn seams(&self) -> [f64; 4] {
        let s = &self.spec;
        [-s.radius, s.radius, s.half_length - s.blend_width, -s.half_length]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExtensionOptions {
    pub cells: usize,
    /// Stored stamps on `[0, eps]` (excluding 0).
    pub snapshots: usize,
    pub epsilon_start: Option<f64>,
    pub epsilon_min: f64,
    pub characteristics: CharacteristicOptions,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self { cells: 512, snapshots: 200, epsilon_start: None, epsilon_min: 1e-6, characteristics: CharacteristicOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Extension {
    pub spec: ExtensionSpec,
    /// Classical lifespan used.
    pub epsilon: f64,
    /// Every epsilon tried, in order.
    pub attempts: Vec<f64>,
    /// Solution on `[0, eps] x [-K, K)`.
    pub classical: Trajectory,
    /// `(t, x) -> classical(t eps / T, x eps / T)` on `[0, T] x [-K T/eps, K T/eps)`.
    pub rescaled: Trajectory,
}

impl Extension {
    pub fn scale(&self) -> f64 {
        self.spec.horizon / self.epsilon
    }
}

fn states_from_levels(law: &PressureLaw, times: &[f64], levels: &[InvariantProfile]) -> Result<Vec<FluidState>> {
    times
        .iter()
        .zip(levels)
        .map(|(&t, lvl)| {
            let n = lvl.w_minus.len();
            let mut rho = Vec::with_capacity(n);
            let mut m = Vec::with_capacity(n);
            for j in 0..n {
                let (r, u) = lvl.state(law, j)?;
                rho.push(r);
                m.push(r * u);
            }
            FluidState::new(t, rho, vec![m])
        })
        .collect()
}

/// Periodic extension, short-time classical solve with epsilon halving, and rescaling.
pub fn extend_to_torus(
    law: &PressureLaw,
    profile: &dyn Fn(f64) -> (f64, f64),
    spec: &ExtensionSpec,
    opts: &ExtensionOptions,
) -> Result<Extension> {
    let ext = PeriodicExtension::new(law, spec, profile)?;
    if opts.cells < 8 || opts.snapshots == 0 {
        return Err(Error::InvalidParameter { name: "cells", constraint: "need at least 8 cells and one snapshot".into() });
    }
    let k = spec.half_length;
    let grid = TorusGrid::new(vec![opts.cells], vec![k])?;
    let h = grid.spacing(0);
    let init = InvariantProfile::sample(-k + 0.5 * h, h, opts.cells, |x| ext.invariants(x));
    let mut eps = opts.epsilon_start.unwrap_or(spec.horizon).min(spec.horizon);
    let mut attempts = Vec::new();
    let solution = loop {
        if eps < opts.epsilon_min {
            return Err(Error::CharacteristicCrossing { epsilon: attempts.last().copied().unwrap_or(eps) });
        }
        attempts.push(eps);
        let times = uniform_times(0.0, eps, opts.snapshots);
        match solve_characteristics(law, &init, Boundary::Periodic, &times, &opts.characteristics) {
            Ok(sol) => break sol,
            Err(Breakdown::Crossing(_)) | Err(Breakdown::NoConvergence(_)) => eps *= 0.5,
        }
    };
    let states = states_from_levels(law, &solution.times, &solution.levels)?;
    let classical = Trajectory::new(grid.clone(), *law, states[0].clone(), states.clone())?;
    let scale = spec.horizon / eps;
    let big = grid.scaled(scale)?;
    let rescaled_states: Vec<FluidState> = states
        .into_iter()
        .map(|mut s| {
            s.time *= scale;
            s
        })
        .collect();
    let rescaled = Trajectory::new(big, *law, rescaled_states[0].clone(), rescaled_states)?;
    Ok(Extension { spec: *spec, epsilon: eps, attempts, classical, rescaled })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0).unwrap()
    }

    fn spec(horizon: f64) -> ExtensionSpec {
        ExtensionSpec { radius: 0.5, half_length: 2.0, horizon, blend_width: 1.0 }
    }

    #[test]
    fn spec_validation() {
        assert!(spec(1.0).validate().is_ok());
        assert!(ExtensionSpec { blend_width: 1.5, ..spec(1.0) }.validate().is_err());
        assert!(ExtensionSpec { half_length: 0.4, ..spec(1.0) }.validate().is_err());
    }

    #[test]
    fn constant_profile_gives_constant_extension() {
        let law = law();
        let profile = |_x: f64| (1.3, 0.2);
        let opts = ExtensionOptions { cells: 64, snapshots: 10, ..Default::default() };
        let e = extend_to_torus(&law, &profile, &spec(1.0), &opts).unwrap();
        assert_eq!(e.epsilon, 1.0);
        for s in e.classical.states.iter().chain(&e.rescaled.states) {
            for c in 0..64 {
                assert!((s.rho[c] - 1.3).abs() < 1e-13 && (s.momentum[0][c] - 0.26).abs() < 1e-13);
            }
        }
        assert_eq!(e.rescaled.grid, e.classical.grid);
    }

    #[test]
    fn blended_data_is_c1_at_seams() {
        let law = law();
        let data = RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap();
        let profile = smooth_riemann_profile(&law, &data, 0.5).unwrap();
        let ext = PeriodicExtension::new(&law, &spec(1.0), &profile).unwrap();
        for h in [1e-3, 5e-4] {
            for x0 in ext.seams() {
                for comp in 0..2 {
                    let f = |x: f64| {
                        let w = ext.invariants(x);
                        if comp == 0 { w.0 } else { w.1 }
                    };
                    let left = (f(x0) - f(x0 - h)) / h;
                    let right = (f(x0 + h) - f(x0)) / h;
                    assert!((left - right).abs() < 20.0 * h, "seam {x0}: {left} vs {right}");
                }
            }
        }
    }

    #[test]
    fn long_horizon_shrinks_epsilon_and_rescales() {
        let law = law();
        let data = RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap();
        let profile = smooth_riemann_profile(&law, &data, 0.5).unwrap();
        let opts = ExtensionOptions { cells: 256, snapshots: 40, ..Default::default() };
        let e = extend_to_torus(&law, &profile, &spec(4.0), &opts).unwrap();
        assert!(e.epsilon < 4.0);
        assert!(e.attempts.len() >= 2);
        let scale = e.scale();
        assert!((e.rescaled.end() - 4.0).abs() < 1e-12);
        assert!((e.rescaled.grid.half_periods()[0] - 2.0 * scale).abs() < 1e-12);
        assert_eq!(e.rescaled.states[3].rho, e.classical.states[3].rho);
    }

    #[test]
    fn crossing_below_minimum_is_an_error() {
        let law = law();
        let data = RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap();
        let profile = smooth_riemann_profile(&law, &data, 0.5).unwrap();
        let opts = ExtensionOptions { cells: 128, snapshots: 10, epsilon_min: 2.0, ..Default::default() };
        assert!(matches!(extend_to_torus(&law, &profile, &spec(4.0), &opts), Err(Error::CharacteristicCrossing { .. })));
    }
}
