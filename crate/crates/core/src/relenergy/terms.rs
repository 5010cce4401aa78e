//! Right-hand sides of the relative energy inequality.
//!
//! Two algebraically equivalent forms are evaluated from a first-order jet
//! of the reference pair: the direct form with the terms
//! `(rho U - m).d_t U + m.grad U.(U - m/rho) + (p(r) - p(rho)) div U +
//! (r - rho) d_t P'(r) + (r U - m).grad P'(r)` and the rearranged form
//! built from the quadratic and pressure-Bregman blocks plus the residuals
//! of the reference equations. For a mollified reference the latter splits
//! into commutator blocks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{FluidState, PressureLaw, TorusGrid, Trajectory};
use crate::regularity::{Field, Mollifier};

/// Values and first derivatives of `(r, U)` at every cell of one time slice.
///
/// `grad_u[a][b]` is `partial_a U_b`.
#[derive(Debug, Clone)]
pub struct ReferenceJet {
    pub r: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub dt_r: Vec<f64>,
    pub dt_u: Vec<Vec<f64>>,
    pub grad_r: Vec<Vec<f64>>,
    pub grad_u: Vec<Vec<Vec<f64>>>,
}

impl ReferenceJet {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    fn check(&self, state: &FluidState) -> Result<()> {
        if state.len() != self.len() || state.dim() != self.dim() {
            return Err(Error::Misaligned("state and reference jet shapes differ".into()));
        }
        if self.r.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Domain("reference density must be positive".into()));
        }
        Ok(())
    }
}

/// `rho (U - v)_a (U - v)_b` with `v = m / rho`, zero in vacuum.
pub(crate) fn quadratic_weight(rho: f64, m: &[f64], u: &[f64], a: usize, b: usize) -> f64 {
    if rho > 0.0 {
        rho * (u[a] - m[a] / rho) * (u[b] - m[b] / rho)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhsDirect {
    pub kinetic: f64,
    pub pressure: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhsRearranged {
    /// `-int rho (U - v).grad U.(U - v)`
    pub quadratic: f64,
    /// `-int (p(rho) - p'(r)(rho - r) - p(r)) div U`
    pub pressure: f64,
    /// `int [d_t(rU) + div(rU (x) U) + grad p(r)].(rho U - m)/r`
    pub momentum_residual: f64,
    /// `int [d_t r + div(rU)] [(1 - rho/r) p'(r) + U.(m - rho U)/r]`
    pub continuity_residual: f64,
    pub total: f64,
}

/// Direct form of the right-hand side at one instant (space integral only).
pub fn rhs_direct(grid: &TorusGrid, law: &PressureLaw, state: &FluidState, jet: &ReferenceJet) -> Result<RhsDirect> {
    jet.check(state)?;
    let dim = jet.dim();
    let (kinetic, pressure) = (0..state.len())
        .into_par_iter()
        .map(|c| {
            let rho = state.rho[c];
            let m = state.momentum_at(c);
            let u: Vec<f64> = (0..dim).map(|b| jet.u[b][c]).collect();
            let r = jet.r[c];
            let mut kin = 0.0;
            for b in 0..dim {
                kin += (rho * u[b] - m[b]) * jet.dt_u[b][c];
                let rel = if rho > 0.0 { u[b] - m[b] / rho } else { 0.0 };
                for a in 0..dim {
                    kin += m[a] * jet.grad_u[a][b][c] * rel;
                }
            }
            let div: f64 = (0..dim).map(|a| jet.grad_u[a][a][c]).sum();
            // P''(r) = p'(r) / r
            let pp = law.p_prime(r) / r;
            let mut press = (law.p(r) - law.p(rho)) * div + (r - rho) * pp * jet.dt_r[c];
            for a in 0..dim {
                press += (r * u[a] - m[a]) * pp * jet.grad_r[a][c];
            }
            (kin, press)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let vol = grid.cell_volume();
    Ok(RhsDirect { kinetic: kinetic * vol, pressure: pressure * vol, total: (kinetic + pressure) * vol })
}

/// Rearranged form of the right-hand side at one instant.
pub fn rhs_rearranged(grid: &TorusGrid, law: &PressureLaw, state: &FluidState, jet: &ReferenceJet) -> Result<RhsRearranged> {
    jet.check(state)?;
    let dim = jet.dim();
    let sums = (0..state.len())
        .into_par_iter()
        .map(|c| {
            let rho = state.rho[c];
            let m = state.momentum_at(c);
            let u: Vec<f64> = (0..dim).map(|b| jet.u[b][c]).collect();
            let r = jet.r[c];
            let mut quad = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    quad -= jet.grad_u[a][b][c] * quadratic_weight(rho, &m, &u, a, b);
                }
            }
            let div: f64 = (0..dim).map(|a| jet.grad_u[a][a][c]).sum();
            let press = -(law.p(rho) - law.p_prime(r) * (rho - r) - law.p(r)) * div;
            // d_t(rU) + div(rU (x) U) + grad p(r), component b
            let div_ru: f64 = (0..dim).map(|a| jet.grad_r[a][c] * u[a] + r * jet.grad_u[a][a][c]).sum();
            let mut mom = 0.0;
            for b in 0..dim {
                let mut e = jet.dt_r[c] * u[b] + r * jet.dt_u[b][c] + u[b] * div_ru + law.p_prime(r) * jet.grad_r[b][c];
                for a in 0..dim {
                    e += r * u[a] * jet.grad_u[a][b][c];
                }
                mom += e * (rho * u[b] - m[b]) / r;
            }
            let weight = (1.0 - rho / r) * law.p_prime(r) + (0..dim).map(|b| u[b] * (m[b] - rho * u[b])).sum::<f64>() / r;
            let cont = (jet.dt_r[c] + div_ru) * weight;
            [quad, press, mom, cont]
        })
        .reduce(|| [0.0; 4], |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]);
    let vol = grid.cell_volume();
    let [q, p, mo, co] = sums.map(|s| s * vol);
    Ok(RhsRearranged { quadratic: q, pressure: p, momentum_residual: mo, continuity_residual: co, total: q + p + mo + co })
}

/// Space-time integrals of the blocks of the inequality with a mollified reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R5Blocks {
    pub epsilon: f64,
    /// Integration window actually used.
    pub window: (f64, f64),
    pub quadratic: f64,
    pub pressure: f64,
    /// `[div([r][U] (x) [U]) + grad p([r]) - [div(rU (x) U) + grad p(r)]].(rho[U] - m)/[r]`
    pub convective: f64,
    /// `[d_t([r][U]) - d_t[rU]].(rho[U] - m)/[r]`
    pub time: f64,
    /// `[div([r][U]) - [div(rU)]] [(1 - rho/[r]) p'([r]) + [U].(m - rho[U])/[r]]`
    pub continuity: f64,
    /// Blocks carrying the mollified reference equations; zero for an exact weak solution.
    pub reference_defect: f64,
}

impl R5Blocks {
    pub fn commutators(&self) -> [f64; 3] {
        [self.convective, self.time, self.continuity]
    }

    pub fn total(&self) -> f64 {
        self.quadratic + self.pressure + self.convective + self.time + self.continuity + self.reference_defect
    }
}

/// Mollified reference fields on the space-time grid.
pub(crate) struct MollifiedReference {
    pub r: Field,
    pub u: Vec<Field>,
    /// `d[axis]` of `[r]`, axis 0 is time.
    pub dr: Vec<Field>,
    /// `du[b][axis]`
    pub du: Vec<Vec<Field>>,
    /// `d_t [r U_b]`
    pub dt_ru: Vec<Field>,
    /// `sum_a d_a [r U_a U_b] + d_b [p(r)]`
    pub flux_div: Vec<Field>,
    /// `sum_a d_a [r U_a]`
    pub mass_div: Field,
    #[cfg_attr(not(test), allow(dead_code))]
    pub valid: Vec<usize>,
}

pub(crate) fn mollify_reference(reference: &Trajectory, eps: f64) -> Result<MollifiedReference> {
    let dim = reference.grid.dim();
    let law = reference.law;
    let vel = |s: &FluidState, b: usize| -> Vec<f64> { s.momentum[b].iter().zip(&s.rho).map(|(m, r)| m / r).collect() };
    let r = Field::space_time(reference, |s| s.rho.clone())?;
    let u: Vec<Field> = (0..dim).map(|b| Field::space_time(reference, |s| vel(s, b))).collect::<Result<_>>()?;
    let m = Mollifier::for_field(eps, &r)?;
    let dr = (0..=dim).map(|ax| m.derivative(&r, ax)).collect::<Result<Vec<_>>>()?;
    let du = u.iter().map(|f| (0..=dim).map(|ax| m.derivative(f, ax)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    let mut dt_ru = Vec::new();
    let mut flux_div = Vec::new();
    let pr = Field::space_time(reference, |s| s.rho.iter().map(|&x| law.p(x)).collect())?;
    let mut mass_div: Option<Field> = None;
    for b in 0..dim {
        let ru = Field::space_time(reference, |s| s.momentum[b].clone())?;
        dt_ru.push(m.derivative(&ru, 0)?);
        let dm = m.derivative(&ru, b + 1)?;
        mass_div = Some(match mass_div {
            None => dm,
            Some(acc) => acc.zip(&dm, |x, y| x + y)?,
        });
        let mut acc = m.derivative(&pr, b + 1)?;
        for a in 0..dim {
            let flux = Field::space_time(reference, |s| {
                (0..s.len()).map(|c| s.momentum[a][c] * s.momentum[b][c] / s.rho[c]).collect()
            })?;
            acc = acc.zip(&m.derivative(&flux, a + 1)?, |x, y| x + y)?;
        }
        flux_div.push(acc);
    }
    let mr = m.mollify(&r)?;
    let mu: Vec<Field> = u.iter().map(|f| m.mollify(f)).collect::<Result<_>>()?;
    let valid = mr.valid_indices();
    Ok(MollifiedReference { r: mr, u: mu, dr, du, dt_ru, flux_div, mass_div: mass_div.expect("dim >= 1"), valid })
}

/// Trapezoid weights of the time stamps of `times` inside `[s, tau]`, restricted to `valid` time indices.
pub(crate) fn time_weights(times: &[f64], valid: (usize, usize), s: f64, tau: f64) -> Result<Vec<(usize, f64)>> {
    let slack = 1e-9 * (times[times.len() - 1] - times[0]).abs().max(1e-300);
    let idx: Vec<usize> = (valid.0..valid.1).filter(|&k| times[k] >= s - slack && times[k] <= tau + slack).collect();
    let first = times[valid.0];
    let last = times[valid.1 - 1];
    if s < first - slack || tau > last + slack {
        return Err(Error::Window(format!("[{s}, {tau}] leaves the mollified time window [{first}, {last}]")));
    }
    if idx.len() < 2 {
        return Err(Error::Window(format!("fewer than two stamps in [{s}, {tau}]")));
    }
    let mut w: Vec<(usize, f64)> = idx.iter().map(|&k| (k, 0.0)).collect();
    for j in 1..idx.len() {
        let dt = times[idx[j]] - times[idx[j - 1]];
        w[j - 1].1 += 0.5 * dt;
        w[j].1 += 0.5 * dt;
    }
    Ok(w)
}

/// The blocks over `[s, tau]` for a state trajectory against a reference with the same uniform stamps.
pub fn rhs_terms_r5(state: &Trajectory, reference: &Trajectory, eps: f64, s: f64, tau: f64) -> Result<R5Blocks> {
    if state.grid != reference.grid || state.states.len() != reference.states.len() {
        return Err(Error::Misaligned("state and reference must share grid and stamps".into()));
    }
    if state.states.iter().zip(&reference.states).any(|(a, b)| (a.time - b.time).abs() > 1e-12 * b.time.abs().max(1.0)) {
        return Err(Error::Misaligned("state and reference stamps differ".into()));
    }
    let law = reference.law;
    let dim = reference.grid.dim();
    let n = reference.grid.len();
    let mr = mollify_reference(reference, eps)?;
    let times = reference.times();
    let weights = time_weights(&times, mr.r.valid[0], s, tau)?;
    let vol = reference.grid.cell_volume();
    let sums = weights
        .par_iter()
        .map(|&(k, wt)| {
            let st = &state.states[k];
            let mut acc = [0.0; 6];
            for c in 0..n {
                let i = k * n + c;
                let rho = st.rho[c];
                let m = st.momentum_at(c);
                let r = mr.r.data[i];
                let u: Vec<f64> = (0..dim).map(|b| mr.u[b].data[i]).collect();
                let gu = |a: usize, b: usize| mr.du[b][a + 1].data[i];
                let gr = |a: usize| mr.dr[a + 1].data[i];
                let mut quad = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        quad -= gu(a, b) * quadratic_weight(rho, &m, &u, a, b);
                    }
                }
                let div: f64 = (0..dim).map(|a| gu(a, a)).sum();
                let press = -(law.p(rho) - law.p_prime(r) * (rho - r) - law.p(r)) * div;
                let div_ru: f64 = (0..dim).map(|a| gr(a) * u[a] + r * gu(a, a)).sum();
                let wc = (1.0 - rho / r) * law.p_prime(r) + (0..dim).map(|b| u[b] * (m[b] - rho * u[b])).sum::<f64>() / r;
                let (mut conv, mut time, mut defect) = (0.0, 0.0, 0.0);
                for b in 0..dim {
                    let w = (rho * u[b] - m[b]) / r;
                    // div([r][U] (x) [U])_b = [U_b] div([r][U]) + [r][U].grad[U_b]
                    let mut smooth_flux = u[b] * div_ru + law.p_prime(r) * gr(b);
                    for a in 0..dim {
                        smooth_flux += r * u[a] * gu(a, b);
                    }
                    conv += (smooth_flux - mr.flux_div[b].data[i]) * w;
                    let dt_prod = mr.dr[0].data[i] * u[b] + r * mr.du[b][0].data[i];
                    time += (dt_prod - mr.dt_ru[b].data[i]) * w;
                    defect += (mr.dt_ru[b].data[i] + mr.flux_div[b].data[i]) * w;
                }
                let cont = (div_ru - mr.mass_div.data[i]) * wc;
                defect += (mr.dr[0].data[i] + mr.mass_div.data[i]) * wc;
                for (slot, v) in acc.iter_mut().zip([quad, press, conv, time, cont, defect]) {
                    *slot += v * wt;
                }
            }
            acc
        })
        .reduce(|| [0.0; 6], |x, y| std::array::from_fn(|j| x[j] + y[j]));
    let [quadratic, pressure, convective, time, continuity, reference_defect] = sums.map(|v| v * vol);
    let window = (times[weights[0].0], times[weights[weights.len() - 1].0]);
    Ok(R5Blocks { epsilon: eps, window, quadratic, pressure, convective, time, continuity, reference_defect })
}

/// Decay verdict of one block over consecutive dyadic levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTrend {
    pub name: String,
    pub values: Vec<f64>,
    /// `(|v_last| / |v_0|)^{1/(levels - 1)}`
    pub ratio: f64,
    pub pass: bool,
}

/// `q < 1` overall and `|v_k| <= wiggle |v_{k-1}|` level to level; all-zero counts as a pass.
pub fn dyadic_trend(name: &str, values: &[f64], wiggle: f64) -> BlockTrend {
    let a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let n = a.len();
    if n >= 2 && a.iter().all(|&v| v == 0.0) {
        return BlockTrend { name: name.into(), values: values.to_vec(), ratio: 0.0, pass: true };
    }
    if n < 2 || a[0] == 0.0 {
        return BlockTrend { name: name.into(), values: values.to_vec(), ratio: f64::NAN, pass: false };
    }
    let q = (a[n - 1] / a[0]).powf(1.0 / (n - 1) as f64);
    let pass = q < 1.0 && a.windows(2).all(|w| w[1] <= wiggle * w[0]);
    BlockTrend { name: name.into(), values: values.to_vec(), ratio: q, pass }
}

#[derive(Debug, Clone, Serialize)]
pub struct R5Trend {
    pub levels: Vec<R5Blocks>,
    pub trends: Vec<BlockTrend>,
    pub pass: bool,
}

/// Blocks over a decreasing dyadic scale list, integrated over a window valid at the largest scale.
pub fn r5_trend(state: &Trajectory, reference: &Trajectory, eps_list: &[f64], window: Option<(f64, f64)>) -> Result<R5Trend> {
    crate::regularity::rates::check_dyadic(eps_list, 2)?;
    let largest = eps_list.iter().copied().fold(0.0, f64::max);
    let (s, tau) = match window {
        Some(w) => w,
        None => {
            let f = Field::space_time(reference, |st| st.rho.clone())?;
            let m = Mollifier::for_field(largest, &f)?;
            let times = reference.times();
            let k = m.reach(0);
            if times.len() <= 2 * k + 1 {
                return Err(Error::Window(format!("time span too short for eps = {largest}")));
            }
            (times[k], times[times.len() - 1 - k])
        }
    };
    let levels = eps_list.iter().map(|&e| rhs_terms_r5(state, reference, e, s, tau)).collect::<Result<Vec<_>>>()?;
    let names = ["convective", "time", "continuity"];
    let trends: Vec<BlockTrend> = (0..3)
        .map(|j| dyadic_trend(names[j], &levels.iter().map(|l| l.commutators()[j]).collect::<Vec<_>>(), 1.2))
        .collect();
    let pass = trends.iter().all(|t| t.pass);
    Ok(R5Trend { levels, trends, pass })
}
