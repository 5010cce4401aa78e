use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FluidState, PressureLaw, TorusGrid, Trajectory};

/// Densities below this are treated as vacuum breakdown.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flux {
    /// Local Lax-Friedrichs (Rusanov).
    Llf,
    Hll,
}

impl std::str::FromStr for Flux {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "llf" | "rusanov" => Ok(Flux::Llf),
            "hll" => Ok(Flux::Hll),
            other => Err(format!("unknown flux `{other}` (expected llf or hll)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub flux: Flux,
    pub cfl: f64,
    pub end_time: f64,
    pub snapshot_stride: usize,
    /// When set, steps are clipped to land on multiples of this interval and
    /// a snapshot is stored at each of them (in place of the stride).
    pub output_interval: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { flux: Flux::Llf, cfl: 0.45, end_time: 0.2, snapshot_stride: 1, output_interval: None }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParameter { name: "cfl", constraint: format!("must lie in (0, 1), got {}", self.cfl) });
        }
        if !(self.end_time > 0.0 && self.end_time.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "end_time",
                constraint: format!("must be > 0, got {}", self.end_time),
            });
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter { name: "snapshot_stride", constraint: "must be >= 1".into() });
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0 && dt <= self.end_time) {
                return Err(Error::InvalidParameter {
                    name: "output_interval",
                    constraint: format!("must lie in (0, end_time], got {dt}"),
                });
            }
        }
        Ok(())
    }
}

/// Conserved variables along one sweep: density, normal momentum, tangential momenta.
#[derive(Clone, Copy)]
struct Cons {
    rho: f64,
    mn: f64,
    mt: [f64; 2],
}

fn physical_flux(law: &PressureLaw, q: &Cons) -> (Cons, f64, f64) {
    let u = q.mn / q.rho;
    let c = law.sound_speed(q.rho);
    let f = Cons { rho: q.mn, mn: q.mn * u + law.p(q.rho), mt: [q.mt[0] * u, q.mt[1] * u] };
    (f, u, c)
}

fn numerical_flux(flux: Flux, law: &PressureLaw, l: &Cons, r: &Cons) -> Cons {
    let (fl, ul, cl) = physical_flux(law, l);
    let (fr, ur, cr) = physical_flux(law, r);
    match flux {
        Flux::Llf => {
            let s = (ul.abs() + cl).max(ur.abs() + cr);
            Cons {
                rho: 0.5 * (fl.rho + fr.rho) - 0.5 * s * (r.rho - l.rho),
                mn: 0.5 * (fl.mn + fr.mn) - 0.5 * s * (r.mn - l.mn),
                mt: [
                    0.5 * (fl.mt[0] + fr.mt[0]) - 0.5 * s * (r.mt[0] - l.mt[0]),
                    0.5 * (fl.mt[1] + fr.mt[1]) - 0.5 * s * (r.mt[1] - l.mt[1]),
                ],
            }
        }
        Flux::Hll => {
            let sl = (ul - cl).min(ur - cr);
            let sr = (ul + cl).max(ur + cr);
            if sl >= 0.0 {
                fl
            } else if sr <= 0.0 {
                fr
            } else {
                let w = 1.0 / (sr - sl);
                let hll = |fa: f64, fb: f64, qa: f64, qb: f64| (sr * fa - sl * fb + sl * sr * (qb - qa)) * w;
                Cons {
                    rho: hll(fl.rho, fr.rho, l.rho, r.rho),
                    mn: hll(fl.mn, fr.mn, l.mn, r.mn),
                    mt: [hll(fl.mt[0], fr.mt[0], l.mt[0], r.mt[0]), hll(fl.mt[1], fr.mt[1], l.mt[1], r.mt[1])],
                }
            }
        }
    }
}

/// Largest `(|u_d| + c) / h_d` over cells and axes.
fn max_rate(grid: &TorusGrid, law: &PressureLaw, state: &FluidState) -> f64 {
    let mut rate: f64 = 0.0;
    for i in 0..state.len() {
        let c = law.sound_speed(state.rho[i]);
        for d in 0..grid.dim() {
            let u = state.momentum[d][i] / state.rho[i];
            rate = rate.max((u.abs() + c) / grid.spacing(d));
        }
    }
    rate
}

fn sweep(grid: &TorusGrid, law: &PressureLaw, flux: Flux, state: &mut FluidState, axis: usize, dt: f64) {
    let n = state.len();
    let dim = grid.dim();
    let tangential: Vec<usize> = (0..dim).filter(|&d| d != axis).collect();
    let load = |s: &FluidState, i: usize| {
        let mut mt = [0.0; 2];
        for (k, &d) in tangential.iter().enumerate() {
            mt[k] = s.momentum[d][i];
        }
        Cons { rho: s.rho[i], mn: s.momentum[axis][i], mt }
    };
    // flux through the right face of every cell
    let faces: Vec<Cons> = (0..n)
        .map(|i| {
            let j = grid.neighbor(i, axis, 1);
            numerical_flux(flux, law, &load(state, i), &load(state, j))
        })
        .collect();
    let lambda = dt / grid.spacing(axis);
    let mut rho = state.rho.clone();
    let mut mom = state.momentum.clone();
    for i in 0..n {
        let left = &faces[grid.neighbor(i, axis, -1)];
        let right = &faces[i];
        rho[i] -= lambda * (right.rho - left.rho);
        mom[axis][i] -= lambda * (right.mn - left.mn);
        for (k, &d) in tangential.iter().enumerate() {
            mom[d][i] -= lambda * (right.mt[k] - left.mt[k]);
        }
    }
    state.rho = rho;
    state.momentum = mom;
}

/// First-order finite-volume solve with forward Euler steps and per-axis sweeps.
pub fn solve(grid: &TorusGrid, law: &PressureLaw, initial: &FluidState, cfg: &SchemeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if initial.len() != grid.len() || initial.dim() != grid.dim() {
        return Err(Error::InvalidGrid("initial state does not match grid".into()));
    }
    check_floor(initial)?;
    let t_end = initial.time + cfg.end_time;
    let mut state = initial.clone();
    let mut states = vec![state.clone()];
    let mut step = 0usize;
    let mut next_output = cfg.output_interval.map(|dt| (1usize, dt));
    let tiny = 1e-14 * cfg.end_time;
    while state.time < t_end - tiny {
        let rate = max_rate(grid, law, &state);
        let mut dt = cfg.cfl / rate;
        if !dt.is_finite() || dt <= tiny {
            return Err(Error::CflCollapse { time: state.time, dt });
        }
        let mut hit_output = false;
        let mut target = t_end;
        if let Some((k, interval)) = next_output {
            let t_out = (initial.time + k as f64 * interval).min(t_end);
            target = t_out;
        }
        if state.time + dt >= target - tiny {
            dt = target - state.time;
            hit_output = true;
        }
        for axis in 0..grid.dim() {
            sweep(grid, law, cfg.flux, &mut state, axis, dt);
        }
        step += 1;
        state.time = if hit_output { target } else { state.time + dt };
        check_floor(&state)?;
        let at_end = state.time >= t_end - tiny;
        if at_end {
            state.time = t_end;
        }
        let store = match next_output.as_mut() {
            Some((k, _)) => {
                if hit_output {
                    *k += 1;
                }
                hit_output
            }
            None => step.is_multiple_of(cfg.snapshot_stride),
        };
        if store || at_end {
            states.push(state.clone());
        }
    }
    Trajectory::new(grid.clone(), *law, initial.clone(), states)
}

fn check_floor(state: &FluidState) -> Result<()> {
    for (cell, &r) in state.rho.iter().enumerate() {
        if !(r >= DENSITY_FLOOR) {
            return Err(Error::VacuumBreakdown { time: state.time, cell, density: r });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn constants_are_fixed_points() {
        for flux in [Flux::Llf, Flux::Hll] {
            for dim in 1..=2 {
                let grid = TorusGrid::cube(dim, 16, 1.0).unwrap();
                let init = FluidState::constant(&grid, 0.0, 1.3, &[0.2, -0.1, 0.0]).unwrap();
                let cfg = SchemeConfig { flux, end_time: 0.1, ..Default::default() };
                let traj = solve(&grid, &law(), &init, &cfg).unwrap();
                for s in &traj.states {
                    assert!(s.rho.iter().all(|&r| r == 1.3));
                    for d in 0..dim {
                        assert!(s.momentum[d].iter().all(|&m| m == init.momentum[d][0]));
                    }
                }
                assert_eq!(traj.end(), 0.1);
            }
        }
    }

    #[test]
    fn mirror_symmetry() {
        let grid = TorusGrid::cube(1, 64, 1.0).unwrap();
        let init = FluidState::from_primitive(&grid, 0.0, |x| {
            let u = if x[0] < 0.0 { -0.5 } else { 0.5 };
            (1.0, [u, 0.0, 0.0])
        })
        .unwrap();
        for flux in [Flux::Llf, Flux::Hll] {
            let cfg = SchemeConfig { flux, end_time: 0.2, ..Default::default() };
            let traj = solve(&grid, &law(), &init, &cfg).unwrap();
            let last = traj.states.last().unwrap();
            let n = grid.len();
            for i in 0..n {
                assert!((last.rho[i] - last.rho[n - 1 - i]).abs() <= 1e-12);
                assert!((last.momentum[0][i] + last.momentum[0][n - 1 - i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn conservation_2d() {
        let grid = TorusGrid::new(vec![24, 16], vec![1.0, 0.5]).unwrap();
        let init = FluidState::from_primitive(&grid, 0.0, |x| {
            let r = 1.0 + 0.3 * (std::f64::consts::PI * x[0]).sin() * (2.0 * std::f64::consts::PI * x[1]).cos();
            (r, [0.2 * (std::f64::consts::PI * x[1]).sin(), 0.1, 0.0])
        })
        .unwrap();
        let cfg = SchemeConfig { end_time: 0.3, ..Default::default() };
        let traj = solve(&grid, &law(), &init, &cfg).unwrap();
        let mass0: f64 = init.rho.iter().sum();
        let mom0: Vec<f64> = init.momentum.iter().map(|m| m.iter().sum()).collect();
        for s in &traj.states {
            let mass: f64 = s.rho.iter().sum();
            assert!((mass - mass0).abs() <= 1e-12 * mass0);
            for d in 0..2 {
                let m: f64 = s.momentum[d].iter().sum();
                assert!((m - mom0[d]).abs() <= 1e-12 * mass0);
            }
        }
    }

    #[test]
    fn output_interval_lands_on_multiples() {
        let grid = TorusGrid::cube(1, 32, 1.0).unwrap();
        let init = FluidState::from_primitive(&grid, 0.0, |x| (1.0 + 0.1 * x[0].cos(), [0.0; 3])).unwrap();
        let cfg = SchemeConfig { end_time: 0.2, output_interval: Some(0.05), ..Default::default() };
        let traj = solve(&grid, &law(), &init, &cfg).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 5);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.05 * k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_breakdown_aborts() {
        let grid = TorusGrid::cube(1, 32, 1.0).unwrap();
        let init = FluidState::from_primitive(&grid, 0.0, |x| {
            let u = if x[0] < 0.0 { -20.0 } else { 20.0 };
            (1.0, [u, 0.0, 0.0])
        })
        .unwrap();
        let cfg = SchemeConfig { end_time: 1.0, ..Default::default() };
        assert!(matches!(solve(&grid, &law(), &init, &cfg), Err(Error::VacuumBreakdown { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = SchemeConfig { cfl: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter { name: "cfl", .. })));
        let bad = SchemeConfig { end_time: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
