use super::solution::{dissipative_energy, DissipativeSolution};
use crate::fields::total_energy;
use crate::relenergy::certificate::{bounds_check, gronwall_checks, initial_check, lipschitz_checks, regularity_checks, stamps_match};
use crate::relenergy::{rate_constant, rel_energy_dissipative, r5_trend, CertificateReport, CertificateSeries, CertifyConfig, Check, ReferenceFields, ReferencePair};

/// Slack floor relative to `E(0-)`, absorbing cancellation in the dissipative form.
const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Uniqueness checks for a dissipative solution: defect algebra, energy monotonicity,
/// the reference hypotheses, initial data and energy, then Gronwall on the
/// dissipative relative energy.
pub fn dt1_certify(sol: &DissipativeSolution, reference: &ReferencePair, cfg: &CertifyConfig) -> CertificateReport {
    let rt = &reference.trajectory;
    let empty = |checks| CertificateReport::from_checks(checks, CertificateSeries::default(), f64::NAN, None);
    if sol.grid != rt.grid || sol.law != rt.law {
        return empty(vec![Check::failed("preconditions", "solution and reference live on different grids or laws")]);
    }
    let times = sol.times();
    if !stamps_match(&times, &rt.times()) {
        return empty(vec![Check::failed("preconditions", "solution and reference time stamps differ")]);
    }
    let start = cfg.start.unwrap_or(reference.delta);
    let Some(start_index) = times.iter().position(|&t| t >= start - 1e-9) else {
        return empty(vec![Check::failed("preconditions", format!("no stamp at or after s = {start}"))]);
    };

    let mut checks = Vec::new();
    match sol.validate() {
        Ok(()) => checks.push(Check::new("defect_algebra", 0.0, 0.0, true)),
        Err(e) => {
            checks.push(Check::failed("defect_algebra", e));
            return empty(checks);
        }
    }
    let energy = match dissipative_energy(sol) {
        Ok(e) => e,
        Err(e) => {
            checks.push(Check::failed("energy_monotone", e));
            return empty(checks);
        }
    };
    let tol = super::solution::MONOTONE_TOLERANCE * energy.initial_energy.abs().max(1.0);
    checks.push(Check::new("energy_monotone", energy.worst_rise, tol, energy.non_increasing));
    checks.push(bounds_check(reference));
    checks.extend(regularity_checks(reference, cfg.besov_stability, cfg.eta_max));

    let grid = &sol.grid;
    let h = (0..grid.dim()).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let eps_d = cfg.eps_d.unwrap_or(4.0 * h);
    let (d_checks, est) = lipschitz_checks(reference, &rt.states[start_index..], eps_d, cfg.region, cfg.divergence_ratio);
    checks.extend(d_checks);
    checks.push(initial_check(&sol.initial.barycenter(), &rt.initial, grid, cfg.tol0));
    let e_ref = total_energy(grid, &sol.law, &rt.initial);
    let gap = (sol.initial_energy - e_ref).abs();
    checks.push(Check::new("initial_energy", gap, cfg.tol0, gap <= cfg.tol0));

    let bary = match sol.barycenter_trajectory() {
        Ok(b) => b,
        Err(e) => {
            checks.push(Check::failed("gronwall", e));
            return empty(checks);
        }
    };
    let rel_e = bary
        .states
        .iter()
        .zip(&rt.states)
        .zip(&energy.energy)
        .map(|((b, r), &e)| Ok(rel_energy_dissipative(grid, &sol.law, &b.rho, &b.momentum, e, &ReferenceFields::from_state(r)?)))
        .collect::<crate::error::Result<Vec<f64>>>();
    let (series, integral_d) = match (rel_e, est) {
        (Ok(e), Some(est)) => {
            let slack = cfg.slack.unwrap_or(e[start_index].max(0.0) + ROUNDOFF_FLOOR * sol.initial_energy.abs());
            let (g, series) = gronwall_checks(&times, &e, &est, start_index, Some(slack), rate_constant(grid.dim(), sol.law.gamma));
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
    let r5 = if cfg.r5_eps.is_empty() { None } else { r5_trend(&bary, rt, &cfg.r5_eps, cfg.r5_window).ok() };
    CertificateReport::from_checks(checks, series, integral_d, r5)
}
