//! Exact self-similar solution of the 1D isentropic Riemann problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::PressureLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannData {
    pub rho_l: f64,
    pub u_l: f64,
    pub rho_r: f64,
    pub u_r: f64,
}

impl RiemannData {
    pub fn new(rho_l: f64, u_l: f64, rho_r: f64, u_r: f64) -> Result<Self> {
        if !(rho_l > 0.0 && rho_r > 0.0) {
            return Err(Error::Domain(format!("Riemann densities must be positive, got {rho_l}, {rho_r}")));
        }
        Ok(Self { rho_l, u_l, rho_r, u_r })
    }
}

/// `(w_minus, w_plus) = u -/+ 2 c(rho) / (gamma - 1)`.
pub fn riemann_invariants(law: &PressureLaw, rho: f64, u: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("Riemann invariants need rho > 0, got {rho}")));
    }
    let k = 2.0 * law.sound_speed(rho) / (law.gamma - 1.0);
    Ok((u - k, u + k))
}

/// Inverse of [`riemann_invariants`].
pub fn state_from_invariants(law: &PressureLaw, w_minus: f64, w_plus: f64) -> Result<(f64, f64)> {
    if !(w_plus > w_minus) {
        return Err(Error::Domain(format!("invariants w- = {w_minus}, w+ = {w_plus} describe vacuum")));
    }
    let u = 0.5 * (w_plus + w_minus);
    let c = 0.25 * (law.gamma - 1.0) * (w_plus - w_minus);
    Ok((law.density_from_sound_speed(c), u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Rarefaction,
    Shock,
    None,
}

/// One characteristic family: for a rarefaction `speeds` is (head, tail) of
/// the fan in left-to-right order, for a shock both entries equal the shock speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub kind: WaveKind,
    pub speeds: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveStructure {
    pub law: PressureLaw,
    pub left: (f64, f64),
    pub middle: (f64, f64),
    pub right: (f64, f64),
    pub waves: [Wave; 2],
}

/// Velocity change `f_K(rho)` across the wave connecting `rho_k` to `rho`:
/// rarefaction branch for `rho <= rho_k`, Hugoniot branch otherwise.
fn wave_curve(law: &PressureLaw, rho: f64, rho_k: f64) -> f64 {
    if rho <= rho_k {
        2.0 / (law.gamma - 1.0) * (law.sound_speed(rho) - law.sound_speed(rho_k))
    } else {
        ((law.p(rho) - law.p(rho_k)) * (rho - rho_k) / (rho * rho_k)).sqrt()
    }
}

/// Bisection tolerance on the middle density (relative).
const ROOT_TOL: f64 = 1e-13;

pub fn solve_riemann(law: &PressureLaw, data: &RiemannData) -> Result<WaveStructure> {
    let RiemannData { rho_l, u_l, rho_r, u_r } = *data;
    if !(rho_l > 0.0 && rho_r > 0.0) {
        return Err(Error::Domain("Riemann densities must be positive".into()));
    }
    let (cl, cr) = (law.sound_speed(rho_l), law.sound_speed(rho_r));
    let limit = 2.0 / (law.gamma - 1.0) * (cl + cr);
    let gap = u_r - u_l;
    if gap >= limit {
        return Err(Error::VacuumFormation { gap, limit });
    }
    let left = (rho_l, u_l);
    let right = (rho_r, u_r);
    if rho_l == rho_r && u_l == u_r {
        let none = Wave { kind: WaveKind::None, speeds: (u_l, u_l) };
        return Ok(WaveStructure { law: *law, left, middle: left, right, waves: [none, none] });
    }

    // phi is increasing, phi(0) < 0 by the vacuum check
    let phi = |rho: f64| wave_curve(law, rho, rho_l) + wave_curve(law, rho, rho_r) + gap;
    let mut lo = 0.0;
    let mut hi = rho_l.max(rho_r);
    while phi(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL * hi {
            break;
        }
    }
    let mut rho_m = 0.5 * (lo + hi);
    let snap = |r: f64, k: f64| (r - k).abs() <= 1e-12 * k;
    if snap(rho_m, rho_l) {
        rho_m = rho_l;
    } else if snap(rho_m, rho_r) {
        rho_m = rho_r;
    }
    let u_m = 0.5 * (u_l + u_r) + 0.5 * (wave_curve(law, rho_m, rho_r) - wave_curve(law, rho_m, rho_l));
    let cm = law.sound_speed(rho_m);

    let family = |rho_k: f64, u_k: f64, c_k: f64, sign: f64| -> Wave {
        if rho_m == rho_k {
            let s = u_k + sign * c_k;
            Wave { kind: WaveKind::None, speeds: (s, s) }
        } else if rho_m < rho_k {
            let (outer, inner) = (u_k + sign * c_k, u_m + sign * cm);
            let speeds = if sign < 0.0 { (outer, inner) } else { (inner, outer) };
            Wave { kind: WaveKind::Rarefaction, speeds }
        } else {
            let s = (rho_m * u_m - rho_k * u_k) / (rho_m - rho_k);
            Wave { kind: WaveKind::Shock, speeds: (s, s) }
        }
    };
    let waves = [family(rho_l, u_l, cl, -1.0), family(rho_r, u_r, cr, 1.0)];
    Ok(WaveStructure { law: *law, left, middle: (rho_m, u_m), right, waves })
}

impl WaveStructure {
    /// Exact state `(rho, u)` at similarity coordinate `xi = x / t`.
    pub fn sample(&self, xi: f64) -> (f64, f64) {
        let law = &self.law;
        let g = law.gamma;
        let [w1, w2] = self.waves;
        if xi < w1.speeds.0 {
            return self.left;
        }
        if w1.kind == WaveKind::Rarefaction && xi < w1.speeds.1 {
            // w_plus is constant across the 1-fan and u - c = xi
            let (rho_l, u_l) = self.left;
            let w_plus = u_l + 2.0 * law.sound_speed(rho_l) / (g - 1.0);
            let c = (g - 1.0) / (g + 1.0) * (w_plus - xi);
            return (law.density_from_sound_speed(c), xi + c);
        }
        if xi < w2.speeds.0 {
            return self.middle;
        }
        if w2.kind == WaveKind::Rarefaction && xi < w2.speeds.1 {
            let (rho_r, u_r) = self.right;
            let w_minus = u_r - 2.0 * law.sound_speed(rho_r) / (g - 1.0);
            let c = (g - 1.0) / (g + 1.0) * (xi - w_minus);
            return (law.density_from_sound_speed(c), xi - c);
        }
        self.right
    }

    /// Leftmost and rightmost signal speeds.
    pub fn fan_extent(&self) -> (f64, f64) {
        (self.waves[0].speeds.0, self.waves[1].speeds.1)
    }

    /// Maximum of `|u| + c` over the solution.
    pub fn max_signal_speed(&self) -> f64 {
        let law = &self.law;
        let (l, r) = self.fan_extent();
        [self.left, self.middle, self.right]
            .iter()
            .map(|&(rho, u)| u.abs() + law.sound_speed(rho))
            .fold(l.abs().max(r.abs()), f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law() -> PressureLaw {
        PressureLaw::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn invariants_example() {
        let (wm, wp) = riemann_invariants(&law(), 1.0, 0.0).unwrap();
        let k = 2.0 * 2f64.sqrt();
        assert!((wm + k).abs() < 1e-15 && (wp - k).abs() < 1e-15);
        assert!(riemann_invariants(&law(), 0.0, 0.0).is_err());
    }

    #[test]
    fn equal_states_have_no_waves() {
        let s = solve_riemann(&law(), &RiemannData::new(1.3, 0.2, 1.3, 0.2).unwrap()).unwrap();
        assert!(s.waves.iter().all(|w| w.kind == WaveKind::None));
        for xi in [-5.0, 0.0, 0.3, 5.0] {
            assert_eq!(s.sample(xi), (1.3, 0.2));
        }
    }

    #[test]
    fn two_rarefaction_middle_state() {
        let s = solve_riemann(&law(), &RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap()).unwrap();
        assert_eq!(s.waves[0].kind, WaveKind::Rarefaction);
        assert_eq!(s.waves[1].kind, WaveKind::Rarefaction);
        // closed form of 2 sqrt(2) (sqrt(rho) - 1) = -0.5
        let sq = 1.0 - 0.5 / (2.0 * 2f64.sqrt());
        assert!((s.middle.0 - sq * sq).abs() < 1e-12);
        assert!(s.middle.1.abs() < 1e-12);
    }

    #[test]
    fn shock_satisfies_rankine_hugoniot_and_lax() {
        let law = law();
        let s = solve_riemann(&law, &RiemannData::new(2.0, 0.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.waves[0].kind, WaveKind::Rarefaction);
        assert_eq!(s.waves[1].kind, WaveKind::Shock);
        let speed = s.waves[1].speeds.0;
        let (rm, um) = s.middle;
        let (rr, ur) = s.right;
        let mass = speed * (rr - rm) - (rr * ur - rm * um);
        let mom = speed * (rr * ur - rm * um) - ((rr * ur * ur + law.p(rr)) - (rm * um * um + law.p(rm)));
        assert!(mass.abs() < 1e-10 && mom.abs() < 1e-10, "{mass} {mom}");
        // Lax: u_m + c_m > s > u_r + c_r
        assert!(um + law.sound_speed(rm) > speed && speed > ur + law.sound_speed(rr));
    }

    #[test]
    fn one_shock_lax_inequalities() {
        let law = law();
        let s = solve_riemann(&law, &RiemannData::new(1.0, 1.0, 1.0, -1.0).unwrap()).unwrap();
        assert_eq!(s.waves[0].kind, WaveKind::Shock);
        assert_eq!(s.waves[1].kind, WaveKind::Shock);
        let s1 = s.waves[0].speeds.0;
        let (rl, ul) = s.left;
        let (rm, um) = s.middle;
        assert!(ul - law.sound_speed(rl) > s1 && s1 > um - law.sound_speed(rm));
    }

    #[test]
    fn vacuum_forming_data_rejected() {
        let r = solve_riemann(&law(), &RiemannData::new(1.0, -5.0, 1.0, 5.0).unwrap());
        assert!(matches!(r, Err(Error::VacuumFormation { .. })));
    }

    #[test]
    fn sampling_outside_fan_reproduces_data() {
        let data = RiemannData::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let s = solve_riemann(&law(), &data).unwrap();
        let (lo, hi) = s.fan_extent();
        assert_eq!(s.sample(lo - 1e-9), (2.0, 0.0));
        assert_eq!(s.sample(hi + 1e-9), (1.0, 0.0));
    }

    #[test]
    fn fan_edges_continuous_and_invariant_constant() {
        let law = law();
        let s = solve_riemann(&law, &RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap()).unwrap();
        let (wp_l, _) = (riemann_invariants(&law, 1.0, -0.5).unwrap().1, ());
        let (h1, t1) = s.waves[0].speeds;
        for k in 0..=100 {
            let xi = h1 + (t1 - h1) * k as f64 / 100.0;
            let (r, u) = s.sample(xi);
            let wp = riemann_invariants(&law, r, u).unwrap().1;
            assert!((wp - wp_l).abs() < 1e-10);
        }
        // mass flux rho (u - xi) is continuous across every fan edge
        let d = 1e-9;
        for edge in [s.waves[0].speeds.0, s.waves[0].speeds.1, s.waves[1].speeds.0, s.waves[1].speeds.1] {
            let (ra, ua) = s.sample(edge - d);
            let (rb, ub) = s.sample(edge + d);
            assert!((ra * (ua - edge) - rb * (ub - edge)).abs() < 1e-8);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn invariants_round_trip(rho in 0.01f64..50.0, u in -10.0f64..10.0, gamma in 1.1f64..3.0) {
                let law = PressureLaw::new(0.7, gamma).unwrap();
                let (wm, wp) = riemann_invariants(&law, rho, u).unwrap();
                let (r2, u2) = state_from_invariants(&law, wm, wp).unwrap();
                prop_assert!((r2 - rho).abs() <= 1e-13 * rho.max(1.0) * 10.0);
                prop_assert!((u2 - u).abs() <= 1e-13 * (1.0 + wm.abs() + wp.abs()));
            }

            #[test]
            fn rarefaction_velocity_nondecreasing(ul in -1.0f64..0.0, ur in 0.0f64..1.0, rl in 0.5f64..2.0, rr in 0.5f64..2.0) {
                let law = PressureLaw::new(1.0, 1.4).unwrap();
                let s = solve_riemann(&law, &RiemannData::new(rl, ul, rr, ur).unwrap()).unwrap();
                if s.waves.iter().all(|w| w.kind != WaveKind::Shock) {
                    let mut prev = f64::NEG_INFINITY;
                    for k in 0..=400 {
                        let xi = -4.0 + 8.0 * k as f64 / 400.0;
                        let u = s.sample(xi).1;
                        prop_assert!(u >= prev - 1e-14);
                        prev = u;
                    }
                }
            }
        }
    }
}
