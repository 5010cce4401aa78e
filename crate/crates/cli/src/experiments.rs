//! One runner per subcommand. Each writes its artifacts under the output
//! directory and returns an [`Outcome`].

use std::fmt;
use std::path::{Path, PathBuf};

use erl_core::fields::{total_energy, FluidState, Trajectory};
use erl_core::fv::{max_abs_residual, solve, weak_residual, SchemeConfig, TemporalBump, TestFunctionBasis};
use erl_core::io::{number, Report, ReportCheck, Snapshot};
use erl_core::mvs::{dt1_certify, DissipativeSolution};
use erl_core::regularity::{commutator_rate, rate_p4_p5, resolved_octaves, weierstrass_field, Field, Power, SlopeFit};
use erl_core::relenergy::{uniqueness_certify, CertificateReport, CertifyConfig, Region, ReferencePair};
use erl_core::riemann::{extend_to_torus, smooth_riemann_profile, ExtensionOptions, PeriodicExtension, TorusRiemann, TorusRiemannSpec};
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, ExperimentConfig, InitialData, MeasureKind};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(erl_core::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<erl_core::Error> for RunError {
    fn from(e: erl_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Core(e.into())
    }
}

pub type RunResult = Result<Outcome, RunError>;

#[derive(Debug)]
pub struct Outcome {
    /// `None` for plain solver runs.
    pub report: Option<Report>,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.report.as_ref().is_none_or(Report::passed)
    }
}

fn params(cfg: &ExperimentConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

fn check(name: &str, value: f64, threshold: f64, pass: bool) -> ReportCheck {
    let finite = |v: f64| v.is_finite().then_some(v);
    ReportCheck { name: name.into(), value: finite(value), threshold: finite(threshold), pass, note: String::new() }
}

fn torus_reference(cfg: &ExperimentConfig) -> Result<TorusRiemann, RunError> {
    let (data, blend_width) = cfg.riemann()?;
    let grid = cfg.grid()?;
    let spec = TorusRiemannSpec { half_length: grid.half_periods()[0], horizon: cfg.scheme.end_time, blend_width };
    Ok(TorusRiemann::new(&cfg.law()?, &data, &spec, &grid)?)
}

fn initial_state(cfg: &ExperimentConfig) -> Result<FluidState, RunError> {
    let grid = cfg.grid()?;
    match &cfg.initial {
        Some(InitialData::Riemann { .. }) => Ok(torus_reference(cfg)?.initial_state()?),
        Some(InitialData::Constant { rho, velocity }) => {
            let m: Vec<f64> = velocity.iter().map(|v| rho * v).collect();
            Ok(FluidState::constant(&grid, 0.0, *rho, &m)?)
        }
        Some(InitialData::Weierstrass { .. }) => {
            Err(ConfigError { key: "initial.kind".into(), constraint: "weierstrass data is for the rate subcommands".into() }.into())
        }
        None => Err(ConfigError { key: "initial".into(), constraint: "missing section".into() }.into()),
    }
}

fn rate_field(cfg: &ExperimentConfig) -> Result<Field, RunError> {
    let grid = cfg.grid()?;
    match &cfg.initial {
        Some(InitialData::Weierstrass { alpha, octaves }) => {
            Ok(weierstrass_field(&grid, *alpha, octaves.unwrap_or_else(|| resolved_octaves(grid.cells()[0]))))
        }
        _ => Err(ConfigError { key: "initial.kind".into(), constraint: "rate runs need `kind = \"weierstrass\"`".into() }.into()),
    }
}

fn prepare(out: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Snapshots `<name>_<k>.erl` and an energy CSV.
fn write_trajectory(traj: &Trajectory, out: &Path, name: &str) -> Result<Vec<PathBuf>, RunError> {
    let dir = out.join(format!("{name}_snapshots"));
    std::fs::create_dir_all(&dir)?;
    let mut paths = Vec::new();
    let mut energy = String::from("t,energy\n");
    for (k, s) in std::iter::once(&traj.initial).chain(&traj.states).enumerate() {
        let path = dir.join(format!("{name}_{k:05}.erl"));
        Snapshot::new(traj.grid.clone(), traj.law, s.clone()).write(&path)?;
        paths.push(path);
        energy.push_str(&format!("{:e},{:e}\n", s.time, total_energy(&traj.grid, &traj.law, s)));
    }
    let e = out.join(format!("{name}_energy.csv"));
    std::fs::write(&e, energy)?;
    paths.push(e);
    Ok(paths)
}

/// `<experiment>.json` plus `<experiment>_series.csv` when there is a series.
fn write_report(report: &Report, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let json = out.join(format!("{}.json", report.experiment));
    report.write(&json)?;
    let mut paths = vec![json];
    if !report.series.t.is_empty() {
        let csv = out.join(format!("{}_series.csv", report.experiment));
        std::fs::write(&csv, report.series_csv()?)?;
        paths.push(csv);
    }
    Ok(paths)
}

fn finish(report: Report, out: &Path, mut artifacts: Vec<PathBuf>) -> RunResult {
    artifacts.extend(write_report(&report, out)?);
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("{}: {}", report.experiment, report.verdict)
    } else {
        format!("{}: {} at {}", report.experiment, report.verdict, failed.join(", "))
    };
    Ok(Outcome { report: Some(report), summary, artifacts })
}

pub fn run_solve(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let traj = solve(&cfg.grid()?, &cfg.law()?, &initial_state(cfg)?, &cfg.scheme()?)?;
    let artifacts = write_trajectory(&traj, out, &cfg.experiment)?;
    Ok(Outcome { report: None, summary: format!("{}: {} states up to t = {}", cfg.experiment, traj.states.len(), traj.end()), artifacts })
}

fn stamps(cfg: &ExperimentConfig) -> Result<Vec<f64>, RunError> {
    let scheme = cfg.scheme()?;
    let dt = scheme.output_interval.unwrap_or(scheme.end_time / 100.0);
    let n = (scheme.end_time / dt).round().max(1.0) as usize;
    Ok(erl_core::uniform_times(0.0, scheme.end_time, n)[1..].to_vec())
}

pub fn run_riemann(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let traj = torus_reference(cfg)?.trajectory(&stamps(cfg)?)?;
    let artifacts = write_trajectory(&traj, out, &cfg.experiment)?;
    Ok(Outcome { report: None, summary: format!("{}: exact solution at {} stamps", cfg.experiment, traj.states.len()), artifacts })
}

/// Fitted slope, its two-sigma band and the underlying table.
fn slope_table(fit: &SlopeFit, eps: &[f64], values: impl Iterator<Item = f64>) -> Value {
    let band = fit.band().map(|(lo, hi)| vec![number(lo), number(hi)]);
    json!({
        "slope": fit.slope().map_or(Value::Null, number),
        "band": band,
        "exact": fit.slope().is_none(),
        "eps": eps.iter().map(|&e| number(e)).collect::<Vec<_>>(),
        "values": values.map(number).collect::<Vec<_>>(),
    })
}

pub fn run_besov_rate(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let reg = &cfg.regularity;
    let rates = rate_p4_p5(&rate_field(cfg)?, reg.p, &reg.eps)?;
    let (lo, hi) = (reg.alpha - 0.1, reg.alpha + 0.15);
    let s4 = rates.s4.slope().unwrap_or(f64::NAN);
    let s5 = rates.s5.slope().unwrap_or(f64::NAN);
    let mut c4 = check("s4_in_band", s4, lo, s4 >= lo && s4 <= hi);
    c4.note = format!("band [{lo}, {hi}]");
    let c5 = check("s5_lower_bound", s5, reg.alpha - 1.1, rates.s5.at_least(reg.alpha - 1.1));
    let eps: Vec<f64> = rates.table.iter().map(|r| r.epsilon).collect();
    let mut slopes = Map::new();
    slopes.insert("s4".into(), slope_table(&rates.s4, &eps, rates.table.iter().map(|r| r.approximation)));
    slopes.insert("s5".into(), slope_table(&rates.s5, &eps, rates.table.iter().map(|r| r.gradient)));
    let report = Report::rate(&cfg.experiment, params(cfg), vec![c4, c5], slopes)?;
    finish(report, out, Vec::new())
}

/// Fitted slope at least this much.
pub const COMMUTATOR_SLOPE_FLOOR: f64 = 0.1;
/// Spread of the implied constants at most this much.
pub const COMMUTATOR_RATIO_CEILING: f64 = 10.0;

pub fn run_commutator_rate(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let reg = &cfg.regularity;
    let rate = commutator_rate(&Power(2), &rate_field(cfg)?, reg.alpha, reg.p, &reg.eps)?;
    let slope = rate.slope.slope().unwrap_or(f64::INFINITY);
    let checks = vec![
        check("slope", slope, COMMUTATOR_SLOPE_FLOOR, rate.slope.at_least(COMMUTATOR_SLOPE_FLOOR)),
        check("constant_ratio", rate.constant_ratio, COMMUTATOR_RATIO_CEILING, rate.constant_ratio <= COMMUTATOR_RATIO_CEILING),
    ];
    let eps: Vec<f64> = rate.table.iter().map(|r| r.epsilon).collect();
    let mut table = slope_table(&rate.slope, &eps, rate.table.iter().map(|r| r.norms.full));
    table["implied_constant"] = rate.table.iter().map(|r| number(r.implied_constant)).collect();
    table["besov"] = number(rate.besov);
    let mut slopes = Map::new();
    slopes.insert("commutator".into(), table);
    slopes.insert("expected".into(), number(2.0 * reg.alpha - 1.0));
    let report = Report::rate(&cfg.experiment, params(cfg), checks, slopes)?;
    finish(report, out, Vec::new())
}

pub fn certify_config(cfg: &ExperimentConfig) -> CertifyConfig {
    let c = &cfg.certificate;
    CertifyConfig {
        eps_d: c.eps_d,
        region: c.region_half_width.map_or(Region::Torus, |w| Region::Centered { half_width: w }),
        tol0: c.tol0,
        start: c.start,
        slack: c.slack,
        besov_stability: c.besov_stability,
        eta_max: cfg.regularity.eta_max,
        divergence_ratio: c.divergence_ratio,
        r5_eps: c.r5_eps.clone(),
        r5_window: c.r5_window.map(|[s, t]| (s, t)),
    }
}

/// Finite-volume run from the Riemann data and the exact reference on its stamps.
pub fn weak_and_reference(cfg: &ExperimentConfig) -> Result<(Trajectory, ReferencePair), RunError> {
    let exact = torus_reference(cfg)?;
    let weak = solve(&cfg.grid()?, &cfg.law()?, &exact.initial_state()?, &cfg.scheme()?)?;
    let reference = exact.trajectory(&weak.times())?;
    let reg = &cfg.regularity;
    Ok((weak, ReferencePair::with_observed_bounds(reference, reg.alpha, reg.p, reg.delta, cfg.certificate.bounds_margin)))
}

fn certificate_outcome(cfg: &ExperimentConfig, cert: &CertificateReport, out: &Path) -> RunResult {
    let report = Report::from_certificate(&cfg.experiment, params(cfg), cert)?;
    finish(report, out, Vec::new())
}

pub fn run_certify(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let (weak, pair) = weak_and_reference(cfg)?;
    let cert = uniqueness_certify(&weak, &pair, &certify_config(cfg));
    certificate_outcome(cfg, &cert, out)
}

/// Default commutator scales of the relative energy run.
pub const R5_DEFAULT_EPS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];

pub fn run_relenergy(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let (weak, pair) = weak_and_reference(cfg)?;
    let mut cc = certify_config(cfg);
    if cc.r5_eps.is_empty() {
        cc.r5_eps = R5_DEFAULT_EPS.to_vec();
    }
    let cert = uniqueness_certify(&weak, &pair, &cc);
    let mut report = Report::from_certificate(&cfg.experiment, params(cfg), &cert)?;
    // the commutator trend decides this run; the certificate checks are kept for context
    let mut checks: Vec<ReportCheck> = Vec::new();
    match &cert.r5 {
        Some(r5) => {
            for t in &r5.trends {
                checks.push(check(&format!("r5_trend_{}", t.name), t.ratio, 1.0, t.pass));
            }
            report.slopes.insert("r5".into(), serde_json::to_value(r5).map_err(erl_core::Error::from)?);
        }
        None => {
            let mut c = check("r5_trend", f64::NAN, 1.0, false);
            c.note = "commutator table could not be computed".into();
            checks.push(c);
        }
    }
    for c in &report.checks {
        if c.name == "gronwall" || c.name == "initial_data" {
            checks.push(c.clone());
        }
    }
    report.verdict = if checks.iter().all(|c| c.pass) { "PASS".into() } else { "FAIL".into() };
    report.checks = checks;
    finish(report, out, Vec::new())
}

/// `exp(-((x - x0) / w)^2)` bump added to the density.
fn perturbed(state: &FluidState, grid: &erl_core::TorusGrid, height: f64, width: f64) -> Result<FluidState, RunError> {
    let rho: Vec<f64> = (0..grid.len()).map(|c| state.rho[c] + height * (-(grid.center(0, c) / width).powi(2)).exp()).collect();
    Ok(FluidState::new(state.time, rho, state.momentum.clone())?)
}

pub fn dissipative_solution(cfg: &ExperimentConfig) -> Result<(DissipativeSolution, ReferencePair), RunError> {
    let (weak, pair) = weak_and_reference(cfg)?;
    let mvs = cfg.mvs.clone().unwrap_or_default();
    let sol = match mvs.measure {
        MeasureKind::Atomic => DissipativeSolution::from_trajectory(&weak)?,
        MeasureKind::Mixture => {
            let grid = cfg.grid()?;
            let init = perturbed(&weak.initial, &grid, mvs.perturbation, mvs.perturbation_width)?;
            let other = solve(&grid, &cfg.law()?, &init, &cfg.scheme()?)?;
            let other = other.resample(&weak.times())?;
            DissipativeSolution::mixture(&weak, &other, &vec![mvs.lambda; grid.len()])?
        }
    };
    Ok((sol, pair))
}

pub fn run_mvs_certify(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let (sol, pair) = dissipative_solution(cfg)?;
    let cert = dt1_certify(&sol, &pair, &certify_config(cfg));
    certificate_outcome(cfg, &cert, out)
}

/// Largest jump of one-sided difference quotients of the invariants across the seams, and its
/// bound `h * max|q''| * max|jump| / width^2` for the quintic blend.
pub fn seam_c1(ext: &PeriodicExtension<'_>, h: f64) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    for x0 in ext.seams() {
        let w0 = ext.invariants(x0);
        let wl = ext.invariants(x0 - h);
        let wr = ext.invariants(x0 + h);
        for (a, b, c) in [(wl.0, w0.0, wr.0), (wl.1, w0.1, wr.1)] {
            worst = worst.max((((c - b) - (b - a)) / h).abs());
        }
    }
    let s = &ext.spec;
    let far = [ext.invariants(-s.radius - h), ext.invariants(s.radius + h)];
    let jump = (far[0].0 - far[1].0).abs().max((far[0].1 - far[1].1).abs());
    let width = s.blend_width.min(2.0 * s.radius);
    // max |q''| of 10 s^3 - 15 s^4 + 6 s^5
    let q2 = 10.0 / 3f64.sqrt();
    (worst, h * q2 * jump.max(f64::MIN_POSITIVE) / (width * width))
}

pub struct ExtensionRun {
    pub report: Report,
    pub rescaled_residual: f64,
    pub fv_residual: f64,
}

pub fn extension_run(cfg: &ExperimentConfig) -> Result<ExtensionRun, RunError> {
    let e = cfg.extension.clone().unwrap_or_default();
    let law = cfg.law()?;
    let (data, _) = cfg.riemann()?;
    let spec = e.spec();
    let profile = smooth_riemann_profile(&law, &data, spec.radius)?;
    let opts = ExtensionOptions { cells: e.cells, snapshots: e.snapshots, epsilon_start: e.epsilon_start, epsilon_min: e.epsilon_min, ..Default::default() };
    let ext = extend_to_torus(&law, &profile, &spec, &opts)?;
    let periodic = PeriodicExtension::new(&law, &spec, &profile)?;
    let (seam, seam_bound) = seam_c1(&periodic, 2.0 * spec.half_length / e.cells as f64);

    let big = &ext.rescaled;
    let bump = TemporalBump { support_end: spec.horizon };
    let basis = TestFunctionBasis::new(&big.grid, e.modes, &[bump])?;
    let rescaled_residual = max_abs_residual(&weak_residual(big, &basis, spec.horizon)?);
    let scheme = SchemeConfig { end_time: spec.horizon, output_interval: Some(spec.horizon / e.snapshots as f64), ..cfg.scheme()? };
    let fv = solve(&big.grid, &law, &big.initial, &scheme)?;
    let fv_residual = max_abs_residual(&weak_residual(&fv, &basis, spec.horizon)?);
    let ratio = rescaled_residual / fv_residual;

    let mut checks = vec![
        check("seam_c1", seam, seam_bound, seam <= seam_bound),
        check("weak_residual_ratio", ratio, e.residual_ratio, ratio <= e.residual_ratio),
    ];
    checks[1].note = format!("rescaled {rescaled_residual:e}, finite volume {fv_residual:e}");
    let mut slopes = Map::new();
    slopes.insert(
        "extension".into(),
        json!({
            "epsilon": number(ext.epsilon),
            "attempts": ext.attempts.iter().map(|&a| number(a)).collect::<Vec<_>>(),
            "scale": number(ext.scale()),
            "rescaled_half_period": number(big.grid.half_periods()[0]),
            "rescaled_residual": number(rescaled_residual),
            "fv_residual": number(fv_residual),
        }),
    );
    let report = Report::rate(&cfg.experiment, params(cfg), checks, slopes)?;
    Ok(ExtensionRun { report, rescaled_residual, fv_residual })
}

pub fn run_extend(cfg: &ExperimentConfig, out: &Path) -> RunResult {
    prepare(out)?;
    let run = extension_run(cfg)?;
    finish(run.report, out, Vec::new())
}

/// Validates every report and writes one summary CSV.
pub fn merge_reports(inputs: &[PathBuf], out: &Path) -> Result<usize, RunError> {
    let mut reports = Vec::new();
    for p in inputs {
        let r = Report::read(p).map_err(|e| ConfigError { key: p.display().to_string(), constraint: e.to_string() })?;
        reports.push(r);
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(out, erl_core::io::summary_csv(&reports)?)?;
    Ok(reports.len())
}
