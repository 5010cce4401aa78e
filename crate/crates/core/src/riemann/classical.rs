//! Classical (C^1) solutions of the 1D isentropic system in Riemann-invariant form.
//!
//! `w_plus = u + 2c/(gamma-1)` is transported with speed `u + c` and
//! `w_minus = u - 2c/(gamma-1)` with speed `u - c`. Each step traces both
//! characteristics back from the grid nodes with trapezoidal speeds, solved
//! by fixed-point iteration, and interpolates the previous level with
//! four-point Lagrange stencils.

use crate::error::{Error, Result};
use crate::fields::PressureLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Values beyond the ends are the end values (state constant outside).
    Constant,
}

#[derive(Debug, Clone, Copy)]
pub struct CharacteristicOptions {
    pub cfl: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Gradient blow-up is declared once a max invariant gradient exceeds
    /// this multiple of its initial value.
    pub gradient_growth_limit: f64,
}

impl Default for CharacteristicOptions {
    fn default() -> Self {
        Self { cfl: 0.5, max_iterations: 50, tolerance: 1e-12, gradient_growth_limit: 8.0 }
    }
}

/// Invariants on uniform nodes `origin + j h`.
#[derive(Debug, Clone)]
pub struct InvariantProfile {
    pub origin: f64,
    pub spacing: f64,
    pub w_minus: Vec<f64>,
    pub w_plus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CharacteristicSolution {
    pub times: Vec<f64>,
    pub levels: Vec<InvariantProfile>,
    pub steps: usize,
}

/// Why a characteristic solve stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Breakdown {
    /// Same-family characteristics crossed or the gradient blew up at this time.
    Crossing(f64),
    /// Fixed-point iteration did not converge.
    NoConvergence(f64),
}

fn speeds(law: &PressureLaw, wm: f64, wp: f64) -> (f64, f64) {
    let u = 0.5 * (wp + wm);
    let c = 0.25 * (law.gamma - 1.0) * (wp - wm);
    (u - c, u + c)
}

struct Interpolator<'a> {
    values: &'a [f64],
    origin: f64,
    spacing: f64,
    boundary: Boundary,
}

impl Interpolator<'_> {
    fn at(&self, x: f64) -> f64 {
        let n = self.values.len() as isize;
        let s = (x - self.origin) / self.spacing;
        let i = s.floor() as isize;
        let f = s - i as f64;
        let get = |k: isize| -> f64 {
            match self.boundary {
                Boundary::Periodic => self.values[k.rem_euclid(n) as usize],
                Boundary::Constant => self.values[k.clamp(0, n - 1) as usize],
            }
        };
        let (a, b, c, d) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        // cubic Lagrange through nodes -1, 0, 1, 2
        let l0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let l1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let l2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let l3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        a * l0 + b * l1 + c * l2 + d * l3
    }
}

fn max_gradient(values: &[f64], spacing: f64, boundary: Boundary) -> f64 {
    let n = values.len();
    let pairs = match boundary {
        Boundary::Periodic => n,
        Boundary::Constant => n - 1,
    };
    (0..pairs).map(|j| (values[(j + 1) % n] - values[j]).abs() / spacing).fold(0.0, f64::max)
}

/// Advance `initial` to each of `output_times` (increasing, starting at or after 0).
pub fn solve_characteristics(
    law: &PressureLaw,
    initial: &InvariantProfile,
    boundary: Boundary,
    output_times: &[f64],
    opts: &CharacteristicOptions,
) -> std::result::Result<CharacteristicSolution, Breakdown> {
    let n = initial.w_minus.len();
    let h = initial.spacing;
    let nodes: Vec<f64> = (0..n).map(|j| initial.origin + j as f64 * h).collect();
    let g0 = max_gradient(&initial.w_minus, h, boundary)
        .max(max_gradient(&initial.w_plus, h, boundary))
        .max(1e-12);
    let mut wm = initial.w_minus.clone();
    let mut wp = initial.w_plus.clone();
    let mut t = 0.0;
    let mut steps = 0;
    let mut times = Vec::with_capacity(output_times.len());
    let mut levels = Vec::with_capacity(output_times.len());
    let mut foot_m = vec![0.0; n];
    let mut foot_p = vec![0.0; n];
    for &t_out in output_times {
        while t < t_out - 1e-14 * t_out.max(1.0) {
            let vmax = wm
                .iter()
                .zip(&wp)
                .map(|(&a, &b)| {
                    let (lm, lp) = speeds(law, a, b);
                    lm.abs().max(lp.abs())
                })
                .fold(1e-12, f64::max);
            let dt = (opts.cfl * h / vmax).min(t_out - t);
            let old_m = Interpolator { values: &wm, origin: initial.origin, spacing: h, boundary };
            let old_p = Interpolator { values: &wp, origin: initial.origin, spacing: h, boundary };
            let mut new_m = wm.clone();
            let mut new_p = wp.clone();
            let mut converged = false;
            for _ in 0..opts.max_iterations {
                let mut change: f64 = 0.0;
                for j in 0..n {
                    let (lm_new, lp_new) = speeds(law, new_m[j], new_p[j]);
                    let xm = nodes[j] - foot_m[j];
                    let xp = nodes[j] - foot_p[j];
                    let (lm_old, _) = speeds(law, old_m.at(xm), old_p.at(xm));
                    let (_, lp_old) = speeds(law, old_m.at(xp), old_p.at(xp));
                    let dm = 0.5 * dt * (lm_new + lm_old);
                    let dp = 0.5 * dt * (lp_new + lp_old);
                    let vm = old_m.at(nodes[j] - dm);
                    let vp = old_p.at(nodes[j] - dp);
                    change = change
                        .max((vm - new_m[j]).abs())
                        .max((vp - new_p[j]).abs())
                        .max((dm - foot_m[j]).abs())
                        .max((dp - foot_p[j]).abs());
                    foot_m[j] = dm;
                    foot_p[j] = dp;
                    new_m[j] = vm;
                    new_p[j] = vp;
                }
                if change <= opts.tolerance {
                    converged = true;
                    break;
                }
            }
            t += dt;
            steps += 1;
            if !converged {
                return Err(Breakdown::NoConvergence(t));
            }
            // feet of one family must keep their order
            let pairs = match boundary {
                Boundary::Periodic => n,
                Boundary::Constant => n - 1,
            };
            for j in 0..pairs {
                let k = (j + 1) % n;
                if foot_m[k] - foot_m[j] >= h || foot_p[k] - foot_p[j] >= h {
                    return Err(Breakdown::Crossing(t));
                }
            }
            wm = new_m;
            wp = new_p;
            let g = max_gradient(&wm, h, boundary).max(max_gradient(&wp, h, boundary));
            if g > opts.gradient_growth_limit * g0 {
                return Err(Breakdown::Crossing(t));
            }
        }
        t = t_out;
        times.push(t_out);
        levels.push(InvariantProfile { origin: initial.origin, spacing: h, w_minus: wm.clone(), w_plus: wp.clone() });
    }
    Ok(CharacteristicSolution { times, levels, steps })
}

impl InvariantProfile {
    pub fn sample<F: Fn(f64) -> (f64, f64)>(origin: f64, spacing: f64, n: usize, f: F) -> Self {
        let (w_minus, w_plus) = (0..n).map(|j| f(origin + j as f64 * spacing)).unzip();
        Self { origin, spacing, w_minus, w_plus }
    }

    /// `(rho, u)` at node `j`.
    pub fn state(&self, law: &PressureLaw, j: usize) -> Result<(f64, f64)> {
        super::exact::state_from_invariants(law, self.w_minus[j], self.w_plus[j])
    }
}

impl From<Breakdown> for Error {
    fn from(b: Breakdown) -> Self {
        match b {
            Breakdown::Crossing(t) | Breakdown::NoConvergence(t) => Error::CharacteristicCrossing { epsilon: t },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::exact::riemann_invariants;

    #[test]
    fn constant_state_is_preserved() {
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let (a, b) = riemann_invariants(&law, 1.2, 0.3).unwrap();
        let init = InvariantProfile::sample(-1.0, 0.01, 200, |_| (a, b));
        let sol = solve_characteristics(&law, &init, Boundary::Periodic, &[0.1, 0.2], &Default::default()).unwrap();
        for lvl in &sol.levels {
            assert!(lvl.w_minus.iter().all(|&w| (w - a).abs() < 1e-14));
            assert!(lvl.w_plus.iter().all(|&w| (w - b).abs() < 1e-14));
        }
    }

    #[test]
    fn simple_wave_matches_implicit_solution() {
        // w_minus constant: w_plus(t, x) = w_plus0(x - lambda(w_plus) t)
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let (wm, _) = riemann_invariants(&law, 1.0, 0.0).unwrap();
        let w0 = |x: f64| 2.0 * 2f64.sqrt() + 0.1 * (std::f64::consts::PI * x).sin();
        let n = 400;
        let h = 2.0 / n as f64;
        let init = InvariantProfile::sample(-1.0 + 0.5 * h, h, n, |x| (wm, w0(x)));
        let t = 0.2;
        let sol = solve_characteristics(&law, &init, Boundary::Periodic, &[t], &Default::default()).unwrap();
        let lvl = &sol.levels[0];
        let mut err: f64 = 0.0;
        for j in 0..n {
            let x = lvl.origin + j as f64 * h;
            // solve w = w0(x - lambda(w) t) by fixed point
            let mut w = lvl.w_plus[j];
            for _ in 0..200 {
                let lp = speeds(&law, wm, w).1;
                w = w0(x - lp * t);
            }
            err = err.max((w - lvl.w_plus[j]).abs());
            assert!((lvl.w_minus[j] - wm).abs() < 1e-12);
        }
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn compressive_data_breaks_down() {
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let (wm, wp) = riemann_invariants(&law, 1.0, 0.0).unwrap();
        let n = 200;
        let h = 2.0 / n as f64;
        let init = InvariantProfile::sample(-1.0, h, n, |x| {
            let v = -(std::f64::consts::PI * x).sin();
            (wm + v, wp + v)
        });
        let r = solve_characteristics(&law, &init, Boundary::Periodic, &[2.0], &Default::default());
        assert!(matches!(r, Err(Breakdown::Crossing(_))));
    }
}
