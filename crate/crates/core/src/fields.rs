//! Torus geometry, state fields and the isentropic constitutive law.
//!
//! Every spatial integral in the crate is a midpoint sum over cells, which is
//! exact on the piecewise-constant fields the finite-volume solver produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform Cartesian grid on the flat torus `prod_i [-L_i, L_i)`.
///
/// Cells are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    cells: Vec<usize>,
    half_periods: Vec<f64>,
}

impl TorusGrid {
    pub fn new(cells: Vec<usize>, half_periods: Vec<f64>) -> Result<Self> {
        let n = cells.len();
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        if half_periods.len() != n {
            return Err(Error::InvalidGrid(format!(
                "{} half-periods for {n} axes",
                half_periods.len()
            )));
        }
        if let Some(c) = cells.iter().find(|&&c| c < 2) {
            return Err(Error::InvalidGrid(format!("{c} cells on an axis; need at least 2")));
        }
        if let Some(l) = half_periods.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGrid(format!("half-period {l} must be positive")));
        }
        Ok(Self { cells, half_periods })
    }

    /// Grid with the same cell count and half-period on every axis.
    pub fn cube(dim: usize, cells: usize, half_period: f64) -> Result<Self> {
        Self::new(vec![cells; dim], vec![half_period; dim])
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn half_periods(&self) -> &[f64] {
        &self.half_periods
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_periods[axis] / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.half_periods.iter().map(|l| 2.0 * l).product()
    }

    /// Cell-center coordinate along one axis.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        -self.half_periods[axis] + (i as f64 + 0.5) * self.spacing(axis)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..].iter().product()
    }

    /// Flat index to per-axis indices (unused axes are zero).
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.cells[axis];
            idx /= self.cells[axis];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.cells)
            .fold(0, |acc, (&i, &n)| acc * n + i % n)
    }

    /// Cell-center coordinates of a flat index (unused axes are zero).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim()) {
            *xa = self.center(axis, mi[axis]);
        }
        x
    }

    /// Periodic wrap of a signed index on one axis.
    pub fn wrap(&self, axis: usize, i: isize) -> usize {
        i.rem_euclid(self.cells[axis] as isize) as usize
    }

    /// Flat index of the neighbour `offset` cells away along `axis`.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let mi = self.multi_index(idx);
        let stride = self.stride(axis);
        let shifted = self.wrap(axis, mi[axis] as isize + offset);
        idx - mi[axis] * stride + shifted * stride
    }

    /// The same torus with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.cells.clone(),
            self.half_periods.iter().map(|l| l * factor).collect(),
        )
    }
}

/// Isentropic pressure `p = a rho^gamma` and its potential `P = a rho^gamma / (gamma - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    pub a: f64,
    pub gamma: f64,
}

impl PressureLaw {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter { name: "a", constraint: format!("must be > 0, got {a}") });
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                constraint: format!("must be > 1, got {gamma}"),
            });
        }
        Ok(Self { a, gamma })
    }

    fn check(rho: f64) -> Result<()> {
        if rho >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("negative density {rho}")))
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.p(rho))
    }

    pub fn pressure_potential(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.potential(rho))
    }

    pub fn pressure_potential_prime(&self, rho: f64) -> Result<f64> {
        Self::check(rho)?;
        Ok(self.potential_prime(rho))
    }

    // Unchecked evaluators for inner loops; callers guarantee rho >= 0.

    #[inline]
    pub fn p(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    #[inline]
    pub fn p_prime(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn potential(&self, rho: f64) -> f64 {
        self.p(rho) / (self.gamma - 1.0)
    }

    #[inline]
    pub fn potential_prime(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    #[inline]
    pub fn potential_second(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 2.0)
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        (self.a * self.gamma).sqrt() * rho.powf(0.5 * (self.gamma - 1.0))
    }

    /// Density with the given sound speed.
    #[inline]
    pub fn density_from_sound_speed(&self, c: f64) -> f64 {
        (c * c / (self.a * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }

    /// Bregman divergence `P(rho) - P'(r)(rho - r) - P(r)` of the pressure potential.
    ///
    /// Written as `a r^gamma / (gamma - 1) * phi(rho / r)` with
    /// `phi(s) = s^gamma - 1 - gamma (s - 1)`; near `s = 1` the binomial series
    /// is summed so the result never loses its sign to cancellation.
    pub fn potential_bregman(&self, rho: f64, r: f64) -> f64 {
        let scale = self.a * r.powf(self.gamma) / (self.gamma - 1.0);
        let d = rho / r - 1.0;
        let phi = if d.abs() < 0.25 {
            let g = self.gamma;
            // binomial coefficients C(g, k) d^k for k >= 2
            let mut term = g * (g - 1.0) / 2.0 * d * d;
            let mut sum = term;
            let mut k = 2.0;
            while term.abs() > 1e-18 * sum.abs() && k < 80.0 {
                term *= (g - k) / (k + 1.0) * d;
                sum += term;
                k += 1.0;
            }
            sum
        } else {
            (1.0 + d).powf(self.gamma) - 1.0 - self.gamma * d
        };
        scale * phi.max(0.0)
    }
}

/// Density and momentum on a torus grid at one instant.
///
/// `momentum[d][cell]` holds component `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub time: f64,
    pub rho: Vec<f64>,
    pub momentum: Vec<Vec<f64>>,
}

impl FluidState {
    pub fn new(time: f64, rho: Vec<f64>, momentum: Vec<Vec<f64>>) -> Result<Self> {
        let n = rho.len();
        if momentum.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidGrid("momentum length differs from density".into()));
        }
        if let Some(r) = rho.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::Domain(format!("density {r} must be nonnegative")));
        }
        Ok(Self { time, rho, momentum })
    }

    pub fn constant(grid: &TorusGrid, time: f64, rho: f64, m: &[f64]) -> Result<Self> {
        let n = grid.len();
        Self::new(time, vec![rho; n], (0..grid.dim()).map(|d| vec![m[d]; n]).collect())
    }

    /// Build from primitive variables `(rho, u)` evaluated at cell centers.
    pub fn from_primitive<F>(grid: &TorusGrid, time: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64; 3]) -> (f64, [f64; 3]),
    {
        let n = grid.len();
        let dim = grid.dim();
        let mut rho = Vec::with_capacity(n);
        let mut momentum = vec![Vec::with_capacity(n); dim];
        for idx in 0..n {
            let (r, u) = f(&grid.coords(idx));
            rho.push(r);
            for d in 0..dim {
                momentum[d].push(r * u[d]);
            }
        }
        Self::new(time, rho, momentum)
    }

    pub fn dim(&self) -> usize {
        self.momentum.len()
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn momentum_at(&self, cell: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (d, md) in self.momentum.iter().enumerate() {
            m[d] = md[cell];
        }
        m
    }

    /// Velocity under the vacuum convention (zero where rho = 0).
    pub fn velocity_at(&self, cell: usize) -> [f64; 3] {
        let r = self.rho[cell];
        let mut u = self.momentum_at(cell);
        for ud in u.iter_mut() {
            *ud = if r > 0.0 { *ud / r } else { 0.0 };
        }
        u
    }

    /// Cells where rho = 0 but m != 0 (infinite kinetic energy).
    pub fn infinite_energy_cells(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.rho[i] == 0.0 && self.momentum.iter().any(|m| m[i] != 0.0))
            .collect()
    }

    /// Pointwise linear interpolation `(1 - lambda) self + lambda other`.
    pub fn lerp(&self, other: &FluidState, lambda: f64) -> FluidState {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
        };
        FluidState {
            time: (1.0 - lambda) * self.time + lambda * other.time,
            rho: mix(&self.rho, &other.rho),
            momentum: self
                .momentum
                .iter()
                .zip(&other.momentum)
                .map(|(a, b)| mix(a, b))
                .collect(),
        }
    }

    /// Translate the state by `shift[axis]` cells on every axis.
    pub fn rotated(&self, grid: &TorusGrid, shift: &[isize]) -> FluidState {
        let n = grid.len();
        let mut perm = vec![0usize; n];
        for (idx, p) in perm.iter_mut().enumerate() {
            let mut target = idx;
            for (axis, &s) in shift.iter().enumerate() {
                target = grid.neighbor(target, axis, s);
            }
            *p = target;
        }
        let apply = |v: &[f64]| {
            let mut out = vec![0.0; n];
            for (idx, &t) in perm.iter().enumerate() {
                out[t] = v[idx];
            }
            out
        };
        FluidState {
            time: self.time,
            rho: apply(&self.rho),
            momentum: self.momentum.iter().map(|m| apply(m)).collect(),
        }
    }
}

/// Time-ordered states on a shared grid plus the initial data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TorusGrid,
    pub law: PressureLaw,
    pub initial: FluidState,
    pub states: Vec<FluidState>,
}

impl Trajectory {
    pub fn new(grid: TorusGrid, law: PressureLaw, initial: FluidState, states: Vec<FluidState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InsufficientData("trajectory without states".into()));
        }
        let n = grid.len();
        for s in std::iter::once(&initial).chain(&states) {
            if s.len() != n || s.dim() != grid.dim() {
                return Err(Error::InvalidGrid("state does not match grid".into()));
            }
        }
        if states.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Misaligned("time stamps must increase strictly".into()));
        }
        Ok(Self { grid, law, initial, states })
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn start(&self) -> f64 {
        self.states[0].time
    }

    pub fn end(&self) -> f64 {
        self.states[self.states.len() - 1].time
    }

    /// State at time `t`, linearly interpolated between neighbouring snapshots.
    pub fn state_at(&self, t: f64) -> Result<FluidState> {
        let (start, end) = (self.start(), self.end());
        let slack = 1e-12 * (end - start).abs().max(1.0);
        if t < start - slack || t > end + slack {
            return Err(Error::OutOfRange { tau: t, start, end });
        }
        let k = self.states.partition_point(|s| s.time <= t);
        if k == 0 {
            return Ok(self.states[0].clone());
        }
        if k == self.states.len() || self.states[k - 1].time == t {
            let mut s = self.states[k - 1].clone();
            if (s.time - t).abs() <= slack {
                s.time = t;
            }
            return Ok(s);
        }
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        let lambda = (t - a.time) / (b.time - a.time);
        let mut s = a.lerp(b, lambda);
        s.time = t;
        Ok(s)
    }

    /// Resample onto the given strictly increasing time stamps.
    pub fn resample(&self, times: &[f64]) -> Result<Trajectory> {
        let states = times.iter().map(|&t| self.state_at(t)).collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.grid.clone(), self.law, self.initial.clone(), states)
    }
}

/// `n + 1` uniform stamps `t0, t0 + dt, ..., t1`.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let dt = (t1 - t0) / n as f64;
    (0..=n).map(|k| if k == n { t1 } else { t0 + k as f64 * dt }).collect()
}

/// `1/2 |m|^2 / rho + P(rho)`; zero in vacuum, infinite when rho = 0 and m != 0.
pub fn energy_density(law: &PressureLaw, rho: f64, m: &[f64]) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::Domain(format!("negative density {rho}")));
    }
    Ok(energy_density_unchecked(law, rho, m))
}

#[inline]
pub(crate) fn energy_density_unchecked(law: &PressureLaw, rho: f64, m: &[f64]) -> f64 {
    let m2: f64 = m.iter().map(|x| x * x).sum();
    let kinetic = if rho > 0.0 {
        0.5 * m2 / rho
    } else if m2 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    kinetic + law.potential(rho)
}

/// Midpoint-rule total energy; infinite when any cell carries momentum in vacuum.
pub fn total_energy(grid: &TorusGrid, law: &PressureLaw, state: &FluidState) -> f64 {
    let dim = state.dim();
    let mut m = [0.0; 3];
    let mut sum = 0.0;
    for i in 0..state.len() {
        for d in 0..dim {
            m[d] = state.momentum[d][i];
        }
        sum += energy_density_unchecked(law, state.rho[i], &m[..dim]);
    }
    sum * grid.cell_volume()
}

/// Midpoint sum of a cell field.
pub fn integrate(grid: &TorusGrid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.cell_volume()
}
