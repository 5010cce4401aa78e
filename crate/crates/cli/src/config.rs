//! TOML experiment configuration.
//!
//! Unknown keys are rejected, and every numeric constraint of the core
//! library is checked at parse time. Errors name the offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use erl_core::error::Error as CoreError;
use erl_core::fields::{PressureLaw, TorusGrid};
use erl_core::fv::{Flux, SchemeConfig};
use erl_core::regularity::dyadic;
use erl_core::riemann::{ExtensionSpec, RiemannData};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}: {}", self.key, self.constraint)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, constraint: impl fmt::Display) -> ConfigError {
    ConfigError { key: key.into(), constraint: constraint.to_string().replace('\n', " ") }
}

/// Maps a core validation error onto a config key under `section`.
fn core(section: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, constraint } => bad(&format!("{section}.{name}"), constraint),
        other => bad(section, other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    #[serde(default)]
    pub law: LawConfig,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub regularity: RegularityConfig,
    #[serde(default)]
    pub certificate: CertificateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mvs: Option<MvsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionSection>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub cells: Vec<usize>,
    pub half_periods: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub a: f64,
    pub gamma: f64,
}

impl Default for LawConfig {
    fn default() -> Self {
        Self { a: 1.0, gamma: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub flux: String,
    pub cfl: f64,
    pub end_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    pub snapshot_stride: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self { flux: "llf".into(), cfl: 0.45, end_time: 0.2, output_interval: Some(0.002), snapshot_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Left state on `x < 0`, right state on `x > 0`, blended back at the seam.
    Riemann {
        rho_l: f64,
        u_l: f64,
        rho_r: f64,
        u_r: f64,
        #[serde(default = "one")]
        blend_width: f64,
    },
    Constant { rho: f64, velocity: Vec<f64> },
    /// Lacunary Weierstrass field of exponent `alpha` (rate runs).
    Weierstrass {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        octaves: Option<u32>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityConfig {
    pub alpha: f64,
    pub p: f64,
    /// Dyadic mollification scales, decreasing.
    pub eps: Vec<f64>,
    pub delta: f64,
    /// Shift budget of the Besov norms; absent means a quarter period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_max: Option<f64>,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self { alpha: 0.6, p: 8.0, eps: dyadic(3, 9), delta: 0.05, eta_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateSection {
    pub tol0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_d: Option<f64>,
    /// Restricts `D` to `|x| <= half_width`; absent means the whole torus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    pub besov_stability: f64,
    pub divergence_ratio: f64,
    /// Relative widening of the observed reference bounds.
    pub bounds_margin: f64,
    pub r5_eps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r5_window: Option<[f64; 2]>,
}

impl Default for CertificateSection {
    fn default() -> Self {
        Self {
            tol0: 1e-8,
            eps_d: None,
            region_half_width: None,
            start: None,
            slack: None,
            besov_stability: 1.25,
            divergence_ratio: 2.0,
            bounds_margin: 0.01,
            r5_eps: Vec::new(),
            r5_window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Dirac measures at the computed states.
    Atomic,
    /// Constant-weight mixture with a run from perturbed data.
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MvsSection {
    pub measure: MeasureKind,
    pub lambda: f64,
    /// Height of the Gaussian density bump in the second run.
    pub perturbation: f64,
    pub perturbation_width: f64,
}

impl Default for MvsSection {
    fn default() -> Self {
        Self { measure: MeasureKind::Atomic, lambda: 0.5, perturbation: 0.05, perturbation_width: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtensionSection {
    pub radius: f64,
    pub half_length: f64,
    pub horizon: f64,
    pub blend_width: f64,
    pub cells: usize,
    pub snapshots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_start: Option<f64>,
    pub epsilon_min: f64,
    /// Largest test-function wavenumber of the residual comparison.
    pub modes: u32,
    /// Admitted ratio of the rescaled residual to the finite-volume residual.
    pub residual_ratio: f64,
}

impl Default for ExtensionSection {
    fn default() -> Self {
        Self {
            radius: 0.5,
            half_length: 2.0,
            horizon: 1.0,
            blend_width: 1.0,
            cells: 512,
            snapshots: 200,
            epsilon_start: None,
            epsilon_min: 1e-6,
            modes: 4,
            residual_ratio: 2.0,
        }
    }
}

impl ExtensionSection {
    pub fn spec(&self) -> ExtensionSpec {
        ExtensionSpec { radius: self.radius, half_length: self.half_length, horizon: self.horizon, blend_width: self.blend_width }
    }
}

fn check_dyadic(key: &str, eps: &[f64], min_len: usize) -> Result<(), ConfigError> {
    erl_core::regularity::rates::check_dyadic(eps, min_len).map_err(|e| bad(key, e))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| text[s].split(['=', '\n']).next().unwrap_or("").trim().to_string()).unwrap_or_default();
            bad(if key.is_empty() { "toml" } else { &key }, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("file", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.experiment.trim().is_empty() || self.experiment.contains(['/', '\\']) {
            return Err(bad("experiment", "must be a nonempty name without path separators"));
        }
        self.grid()?;
        self.law()?;
        self.scheme()?;
        let reg = &self.regularity;
        if !(reg.alpha > 0.0 && reg.alpha < 1.0) {
            return Err(bad("regularity.alpha", format!("must lie in (0, 1), got {}", reg.alpha)));
        }
        if !(reg.p >= 1.0) {
            return Err(bad("regularity.p", format!("must be >= 1, got {}", reg.p)));
        }
        if !(reg.delta >= 0.0 && reg.delta < self.scheme.end_time) {
            return Err(bad("regularity.delta", format!("must lie in [0, end_time), got {}", reg.delta)));
        }
        check_dyadic("regularity.eps", &reg.eps, 3)?;
        if reg.eta_max.is_some_and(|e| !(e > 0.0)) {
            return Err(bad("regularity.eta_max", "must be positive"));
        }
        let c = &self.certificate;
        if !(c.tol0 >= 0.0) {
            return Err(bad("certificate.tol0", "must be >= 0"));
        }
        if let Some(e) = c.eps_d {
            if !(e > 0.0) {
                return Err(bad("certificate.eps_d", "must be positive"));
            }
        }
        if let Some(w) = c.region_half_width {
            if !(w > 0.0) {
                return Err(bad("certificate.region_half_width", "must be positive"));
            }
        }
        if let Some(s) = c.start {
            if !(s >= 0.0 && s < self.scheme.end_time) {
                return Err(bad("certificate.start", "must lie in [0, end_time)"));
            }
        }
        if let Some(s) = c.slack {
            if !(s >= 0.0) {
                return Err(bad("certificate.slack", "must be >= 0"));
            }
        }
        if !(c.besov_stability >= 1.0) {
            return Err(bad("certificate.besov_stability", "must be >= 1"));
        }
        if !(c.divergence_ratio > 1.0) {
            return Err(bad("certificate.divergence_ratio", "must exceed 1"));
        }
        if !(c.bounds_margin >= 0.0 && c.bounds_margin < 1.0) {
            return Err(bad("certificate.bounds_margin", "must lie in [0, 1)"));
        }
        if !c.r5_eps.is_empty() {
            check_dyadic("certificate.r5_eps", &c.r5_eps, 2)?;
        }
        if let Some([s, t]) = c.r5_window {
            if !(s < t) {
                return Err(bad("certificate.r5_window", "must be an increasing pair"));
            }
        }
        if let Some(m) = &self.mvs {
            if !(m.lambda > 0.0 && m.lambda <= 1.0) {
                return Err(bad("mvs.lambda", format!("must lie in (0, 1], got {}", m.lambda)));
            }
            if !(m.perturbation.is_finite() && m.perturbation_width > 0.0) {
                return Err(bad("mvs.perturbation_width", "must be positive with a finite perturbation"));
            }
        }
        if let Some(e) = &self.extension {
            e.spec().validate().map_err(|err| core("extension", err))?;
            if e.cells < 8 || e.snapshots == 0 {
                return Err(bad("extension.cells", "need at least 8 cells and one snapshot"));
            }
            if !(e.epsilon_min > 0.0) || e.epsilon_start.is_some_and(|s| !(s > 0.0)) {
                return Err(bad("extension.epsilon_min", "epsilons must be positive"));
            }
            if !(e.residual_ratio > 0.0) || e.modes == 0 {
                return Err(bad("extension.modes", "need at least one mode and a positive residual ratio"));
            }
        }
        match &self.initial {
            Some(InitialData::Riemann { rho_l, u_l, rho_r, u_r, blend_width }) => {
                let data = RiemannData::new(*rho_l, *u_l, *rho_r, *u_r).map_err(|e| core("initial", e))?;
                erl_core::riemann::solve_riemann(&self.law()?, &data).map_err(|e| core("initial", e))?;
                if !(*blend_width > 0.0) {
                    return Err(bad("initial.blend_width", "must be positive"));
                }
                if self.grid.cells.len() != 1 {
                    return Err(bad("grid.cells", "Riemann data needs a one-dimensional grid"));
                }
            }
            Some(InitialData::Constant { rho, velocity }) => {
                if !(*rho >= 0.0) {
                    return Err(bad("initial.rho", "must be >= 0"));
                }
                if velocity.len() != self.grid.cells.len() {
                    return Err(bad("initial.velocity", format!("needs {} components", self.grid.cells.len())));
                }
            }
            Some(InitialData::Weierstrass { alpha, octaves }) => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(bad("initial.alpha", "must lie in (0, 1)"));
                }
                if octaves.is_some_and(|k| k == 0) {
                    return Err(bad("initial.octaves", "must be positive"));
                }
            }
            None => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid, ConfigError> {
        TorusGrid::new(self.grid.cells.clone(), self.grid.half_periods.clone()).map_err(|e| bad("grid", e))
    }

    pub fn law(&self) -> Result<PressureLaw, ConfigError> {
        PressureLaw::new(self.law.a, self.law.gamma).map_err(|e| match e {
            CoreError::InvalidParameter { name, constraint } => bad(&format!("law.{name}"), constraint),
            other => bad("law", other),
        })
    }

    pub fn scheme(&self) -> Result<SchemeConfig, ConfigError> {
        let flux: Flux = self.scheme.flux.parse().map_err(|e| bad("scheme.flux", e))?;
        let cfg = SchemeConfig {
            flux,
            cfl: self.scheme.cfl,
            end_time: self.scheme.end_time,
            snapshot_stride: self.scheme.snapshot_stride,
            output_interval: self.scheme.output_interval,
        };
        cfg.validate().map_err(|e| core("scheme", e))?;
        Ok(cfg)
    }

    pub fn riemann(&self) -> Result<(RiemannData, f64), ConfigError> {
        match &self.initial {
            Some(InitialData::Riemann { rho_l, u_l, rho_r, u_r, blend_width }) => {
                Ok((RiemannData::new(*rho_l, *u_l, *rho_r, *u_r).map_err(|e| core("initial", e))?, *blend_width))
            }
            _ => Err(bad("initial.kind", "this subcommand needs `kind = \"riemann\"`")),
        }
    }
}
