//! Weak-strong uniqueness certificate for a computed weak trajectory against
//! a declared reference pair.
//!
//! The checks run in a fixed order and every one of them is reported. A
//! violated precondition becomes a failing check rather than an error.

use serde::Serialize;

use super::functional::{rel_energy, ReferenceFields};
use super::gronwall::{gronwall_certify, rate_constant};
use super::lipschitz::{estimate_d, OneSidedLipschitz, Region, VelocitySeries};
use super::terms::{r5_trend, R5Trend};
use crate::fields::{integrate, FluidState, Trajectory};
use crate::fv::energy_monitor;
use crate::regularity::{besov_norm, BesovWindow, Field};

/// Reference solution with its declared bounds and regularity.
#[derive(Debug, Clone)]
pub struct ReferencePair {
    pub trajectory: Trajectory,
    pub r_lo: f64,
    pub r_hi: f64,
    pub u_max: f64,
    pub alpha: f64,
    pub p: f64,
    /// Regularity is claimed on `(delta, T)`.
    pub delta: f64,
}

impl ReferencePair {
    /// Bounds read off the trajectory and widened by `margin` (relative).
    pub fn with_observed_bounds(trajectory: Trajectory, alpha: f64, p: f64, delta: f64, margin: f64) -> Self {
        let (lo, hi, u) = observed_bounds(&trajectory);
        Self { trajectory, r_lo: lo * (1.0 - margin), r_hi: hi * (1.0 + margin), u_max: u * (1.0 + margin), alpha, p, delta }
    }
}

fn observed_bounds(traj: &Trajectory) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut umax: f64 = 0.0;
    for s in std::iter::once(&traj.initial).chain(&traj.states) {
        for c in 0..s.len() {
            let r = s.rho[c];
            lo = lo.min(r);
            hi = hi.max(r);
            let u = s.velocity_at(c);
            let speed = if r > 0.0 { u.iter().map(|v| v * v).sum::<f64>().sqrt() } else { f64::INFINITY };
            umax = umax.max(speed);
        }
    }
    (lo, hi, umax)
}

#[derive(Debug, Clone)]
pub struct CertifyConfig {
    /// Mollification scale of `D`; `None` is four cells.
    pub eps_d: Option<f64>,
    pub region: Region,
    /// Bound on the initial `L^1` mismatch.
    pub tol0: f64,
    /// Gronwall start; `None` is `delta`.
    pub start: Option<f64>,
    /// Gronwall slack; `None` is the relative energy at the start.
    pub slack: Option<f64>,
    /// Largest admitted ratio of the Besov norm between the grid and its coarsening.
    pub besov_stability: f64,
    /// Shift budget of the Besov norms; `None` is a quarter period.
    pub eta_max: Option<f64>,
    /// `sum D dt` at `2h` over `8h` at or above this ratio counts as divergent.
    pub divergence_ratio: f64,
    /// Scales of the commutator table; empty skips it.
    pub r5_eps: Vec<f64>,
    pub r5_window: Option<(f64, f64)>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            eps_d: None,
            region: Region::Torus,
            tol0: 1e-8,
            start: None,
            slack: None,
            besov_stability: 1.25,
            eta_max: None,
            divergence_ratio: 2.0,
            r5_eps: Vec::new(),
            r5_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    pub(crate) fn new(name: &str, value: f64, threshold: f64, pass: bool) -> Self {
        Self { name: name.into(), value, threshold, pass, note: String::new() }
    }

    pub(crate) fn failed(name: &str, note: impl ToString) -> Self {
        Self { name: name.into(), value: f64::NAN, threshold: f64::NAN, pass: false, note: note.to_string() }
    }

    pub(crate) fn with_note(mut self, note: impl ToString) -> Self {
        self.note = note.to_string();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Relative energy, `D` and the Gronwall envelope on the certified window.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CertificateSeries {
    pub t: Vec<f64>,
    pub rel_energy: Vec<f64>,
    pub d: Vec<f64>,
    pub gronwall_bound: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
    pub series: CertificateSeries,
    /// `sum D dt` over the certified window.
    pub integral_d: f64,
    pub r5: Option<R5Trend>,
    pub verdict: Verdict,
}

impl CertificateReport {
    pub(crate) fn from_checks(checks: Vec<Check>, series: CertificateSeries, integral_d: f64, r5: Option<R5Trend>) -> Self {
        let verdict = if !checks.is_empty() && checks.iter().all(|c| c.pass) { Verdict::Pass } else { Verdict::Fail };
        Self { checks, series, integral_d, r5, verdict }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Worst violation of `r_lo <= r <= r_hi`, `|U| <= u_max` over every reference state.
pub(crate) fn bounds_check(reference: &ReferencePair) -> Check {
    if !(reference.r_lo > 0.0 && reference.r_hi >= reference.r_lo && reference.u_max >= 0.0) {
        return Check::failed("bounds", "declared bounds must satisfy 0 < r_lo <= r_hi and u_max >= 0");
    }
    let (lo, hi, u) = observed_bounds(&reference.trajectory);
    let excess = (reference.r_lo - lo).max(hi - reference.r_hi).max(u - reference.u_max);
    Check::new("bounds", excess, 0.0, excess <= 0.0)
}

/// States with `t >= from`, as a trajectory.
fn tail(traj: &Trajectory, from: f64) -> Option<Trajectory> {
    let states: Vec<FluidState> = traj.states.iter().filter(|s| s.time >= from - 1e-9).cloned().collect();
    Trajectory::new(traj.grid.clone(), traj.law, traj.initial.clone(), states).ok()
}

fn besov_ratio(components: &[Field], alpha: f64, p: f64, eta_max: Option<f64>) -> crate::error::Result<(f64, f64)> {
    let eta_max = eta_max.unwrap_or_else(|| BesovWindow::default_eta_max(&components[0]));
    let window = BesovWindow { alpha, p, eta_max };
    window.validate()?;
    let refs: Vec<&Field> = components.iter().collect();
    let fine = besov_norm(&refs, &window, None)?.total;
    let coarse_fields = components.iter().map(|f| f.coarsened()).collect::<crate::error::Result<Vec<_>>>()?;
    let coarse_refs: Vec<&Field> = coarse_fields.iter().collect();
    let coarse = besov_norm(&coarse_refs, &window, None)?.total;
    Ok((fine, coarse))
}

/// Exponent hypotheses, then finiteness and grid stability of the Besov norms of `r` and `U` on `(delta, T)`.
pub(crate) fn regularity_checks(reference: &ReferencePair, stability: f64, eta_max: Option<f64>) -> Vec<Check> {
    let gamma = reference.trajectory.law.gamma;
    let p_min = 4.0 * gamma / (gamma - 1.0);
    let mut out = vec![
        Check::new("alpha", reference.alpha, 0.5, reference.alpha > 0.5 && reference.alpha < 1.0),
        Check::new("p", reference.p, p_min, reference.p >= p_min),
    ];
    if !out.iter().all(|c| c.pass) {
        return out;
    }
    let Some(sub) = tail(&reference.trajectory, reference.delta) else {
        out.push(Check::failed("besov", format!("no reference states after delta = {}", reference.delta)));
        return out;
    };
    let fields = (|| -> crate::error::Result<(Vec<Field>, Vec<Field>)> {
        let r = Field::space_time(&sub, |s| s.rho.clone())?;
        let u = (0..sub.grid.dim())
            .map(|d| Field::space_time(&sub, |s| s.momentum[d].iter().zip(&s.rho).map(|(m, r)| m / r).collect()))
            .collect::<crate::error::Result<Vec<_>>>()?;
        Ok((vec![r], u))
    })();
    let (r, u) = match fields {
        Ok(v) => v,
        Err(e) => {
            out.push(Check::failed("besov", e));
            return out;
        }
    };
    for (name, comps) in [("besov_r", r), ("besov_u", u)] {
        out.push(match besov_ratio(&comps, reference.alpha, reference.p, eta_max) {
            Ok((fine, coarse)) => {
                let ratio = if fine == coarse { 1.0 } else { (fine / coarse).max(coarse / fine) };
                let ok = fine.is_finite() && coarse.is_finite() && ratio <= stability;
                Check::new(name, ratio, stability, ok).with_note(format!("norm {fine:.6e} on the grid, {coarse:.6e} coarsened"))
            }
            Err(e) => Check::failed(name, e),
        });
    }
    out
}

/// `D` at the working scale and the divergence test between `2h` and `8h`, on stamps from `start`.
pub(crate) fn lipschitz_checks(
    reference: &ReferencePair,
    states: &[FluidState],
    eps_d: f64,
    region: Region,
    ratio_limit: f64,
) -> (Vec<Check>, Option<OneSidedLipschitz>) {
    let grid = &reference.trajectory.grid;
    let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let series = VelocitySeries::from_states(states);
    let est = match estimate_d(grid, &series, eps_d, region) {
        Ok(e) => e,
        Err(e) => return (vec![Check::failed("d_integrable", e)], None),
    };
    let (fine, coarse) = match (estimate_d(grid, &series, 2.0 * h, region), estimate_d(grid, &series, 8.0 * h, region)) {
        (Ok(a), Ok(b)) => (a.integral(), b.integral()),
        (Err(e), _) | (_, Err(e)) => return (vec![Check::failed("d_integrable", e)], Some(est)),
    };
    let ratio = if coarse > 0.0 { fine / coarse } else if fine > 0.0 { f64::INFINITY } else { 1.0 };
    let ok = est.integral().is_finite() && ratio < ratio_limit;
    let check = Check::new("d_integrable", ratio, ratio_limit, ok)
        .with_note(format!("sum D dt = {:.6e} at eps_D = {eps_d:.3e}, {fine:.6e} at 2h, {coarse:.6e} at 8h", est.integral()));
    (vec![check], Some(est))
}

pub(crate) fn initial_check(weak: &FluidState, reference: &FluidState, grid: &crate::fields::TorusGrid, tol0: f64) -> Check {
    if weak.len() != reference.len() || weak.dim() != reference.dim() {
        return Check::failed("initial_data", "initial states differ in shape");
    }
    let diff: Vec<f64> = (0..weak.len())
        .map(|c| {
            let mut s = (weak.rho[c] - reference.rho[c]).abs();
            for d in 0..weak.dim() {
                s += (weak.momentum[d][c] - reference.momentum[d][c]).abs();
            }
            s
        })
        .collect();
    let l1 = integrate(grid, &diff);
    Check::new("initial_data", l1, tol0, l1 <= tol0)
}

/// Gronwall on stamps from `start_index`, plus the limit check on `(0, s]`.
pub(crate) fn gronwall_checks(
    times: &[f64],
    rel_e: &[f64],
    est: &OneSidedLipschitz,
    start_index: usize,
    slack: Option<f64>,
    c: f64,
) -> (Vec<Check>, CertificateSeries) {
    let t = &times[start_index..];
    let e = &rel_e[start_index..];
    let slack = slack.unwrap_or(e[0]);
    let mut out = Vec::new();
    let early = rel_e[..=start_index].iter().zip(times).filter(|(_, &t)| t > 0.0).map(|(e, _)| *e).fold(0.0, f64::max);
    out.push(Check::new("start_limit", early, e[0] + slack, early <= e[0] + slack));
    match gronwall_certify(t, e, &est.d, c, slack) {
        Ok(g) => {
            let worst = g.rel_energy.iter().zip(&g.bound).map(|(e, b)| if *b > 0.0 { e / b } else if *e > 0.0 { f64::INFINITY } else { 0.0 }).fold(0.0, f64::max);
            let mut check = Check::new("gronwall", worst, 1.0, g.pass);
            if let Some(k) = g.first_violation {
                check = check.with_note(format!("bound exceeded at t = {}", g.times[k]));
            }
            out.push(check);
            let series = CertificateSeries { t: g.times, rel_energy: g.rel_energy, d: est.d.clone(), gronwall_bound: g.bound };
            (out, series)
        }
        Err(err) => {
            out.push(Check::failed("gronwall", err));
            (out, CertificateSeries { t: t.to_vec(), rel_energy: e.to_vec(), d: est.d.clone(), gronwall_bound: Vec::new() })
        }
    }
}

pub(crate) fn stamps_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
}

/// Runs every check against the weak trajectory and returns the report.
pub fn uniqueness_certify(weak: &Trajectory, reference: &ReferencePair, cfg: &CertifyConfig) -> CertificateReport {
    let rt = &reference.trajectory;
    let empty = |checks| CertificateReport::from_checks(checks, CertificateSeries::default(), f64::NAN, None);
    if weak.grid != rt.grid || weak.law != rt.law {
        return empty(vec![Check::failed("preconditions", "weak and reference trajectories live on different grids or laws")]);
    }
    let times = weak.times();
    if !stamps_match(&times, &rt.times()) {
        return empty(vec![Check::failed("preconditions", "weak and reference time stamps differ")]);
    }
    let start = cfg.start.unwrap_or(reference.delta);
    let Some(start_index) = times.iter().position(|&t| t >= start - 1e-9) else {
        return empty(vec![Check::failed("preconditions", format!("no stamp at or after s = {start}"))]);
    };

    let mut checks = Vec::new();
    let monitor = energy_monitor(weak);
    let worst_rise = std::iter::once(monitor.initial_energy)
        .chain(monitor.energies.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("energy_admissible", worst_rise, monitor.tolerance, monitor.pass));
    checks.push(bounds_check(reference));
    checks.extend(regularity_checks(reference, cfg.besov_stability, cfg.eta_max));

    let grid = &weak.grid;
    let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let eps_d = cfg.eps_d.unwrap_or(4.0 * h);
    let (d_checks, est) = lipschitz_checks(reference, &rt.states[start_index..], eps_d, cfg.region, cfg.divergence_ratio);
    checks.extend(d_checks);
    checks.push(initial_check(&weak.initial, &rt.initial, grid, cfg.tol0));

    let rel_e = weak
        .states
        .iter()
        .zip(&rt.states)
        .map(|(w, r)| Ok(rel_energy(grid, &weak.law, w, &ReferenceFields::from_state(r)?)?.integral))
        .collect::<crate::error::Result<Vec<f64>>>();
    let (series, integral_d) = match (rel_e, est) {
        (Ok(e), Some(est)) => {
            let (g, series) = gronwall_checks(&times, &e, &est, start_index, cfg.slack, rate_constant(grid.dim(), weak.law.gamma));
            checks.extend(g);
            (series, est.integral())
        }
        (Err(err), _) => {
            checks.push(Check::failed("gronwall", err));
            (CertificateSeries::default(), f64::NAN)
        }
        (_, None) => {
            checks.push(Check::failed("gronwall", "no D estimate"));
            (CertificateSeries::default(), f64::NAN)
        }
    };

    let r5 = if cfg.r5_eps.is_empty() { None } else { r5_trend(weak, rt, &cfg.r5_eps, cfg.r5_window).ok() };
    CertificateReport::from_checks(checks, series, integral_d, r5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{PressureLaw, TorusGrid};
    use crate::fv::{solve, SchemeConfig};
    use crate::riemann::{RiemannData, TorusRiemann, TorusRiemannSpec};

    fn run(n: usize, data: RiemannData) -> (Trajectory, ReferencePair) {
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let grid = TorusGrid::new(vec![n], vec![2.0]).unwrap();
        let exact = TorusRiemann::new(&law, &data, &TorusRiemannSpec::default(), &grid).unwrap();
        let init = exact.initial_state().unwrap();
        let cfg = SchemeConfig { end_time: 0.2, output_interval: Some(0.002), ..SchemeConfig::default() };
        let weak = solve(&grid, &law, &init, &cfg).unwrap();
        let reference = exact.trajectory(&weak.times()).unwrap();
        (weak, ReferencePair::with_observed_bounds(reference, 0.6, 8.0, 0.05, 0.01))
    }

    #[test]
    fn rarefaction_certifies() {
        let (weak, reference) = run(256, RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap());
        let report = uniqueness_certify(&weak, &reference, &CertifyConfig::default());
        assert!(report.passed(), "{:#?}", report.checks);
        assert_eq!(report.series.t.len(), report.series.gronwall_bound.len());
        assert!((report.series.t[0] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn shock_fails_on_d() {
        let (weak, reference) = run(256, RiemannData::new(1.0, 0.5, 1.0, -0.5).unwrap());
        let report = uniqueness_certify(&weak, &reference, &CertifyConfig::default());
        assert!(!report.passed());
        let d = report.check("d_integrable").unwrap();
        assert!(!d.pass && d.value >= 3.0, "{d:?}");
    }

    #[test]
    fn preconditions_are_reported() {
        let (weak, reference) = run(64, RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap());
        let mut short = weak.clone();
        short.states.pop();
        let report = uniqueness_certify(&short, &reference, &CertifyConfig::default());
        assert_eq!(report.first_failure().unwrap().name, "preconditions");
        let mut bad = reference.clone();
        bad.alpha = 0.5;
        let report = uniqueness_certify(&weak, &bad, &CertifyConfig::default());
        assert!(!report.check("alpha").unwrap().pass);
        assert_eq!(serde_json::to_value(report.verdict).unwrap(), "FAIL");
    }
}
