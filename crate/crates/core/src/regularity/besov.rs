use rayon::prelude::*;
use serde::Serialize;

use super::field::{lp_norm, Field};
use crate::error::{Error, Result};

/// Exponents and shift budget of a `B^{alpha, infinity}_p` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovWindow {
    pub alpha: f64,
    pub p: f64,
    /// Largest admitted shift length `|eta|`.
    pub eta_max: f64,
}

impl BesovWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter { name: "alpha", constraint: format!("{} not in (0, 1)", self.alpha) });
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParameter { name: "p", constraint: format!("{} < 1", self.p) });
        }
        if !(self.eta_max > 0.0) {
            return Err(Error::InvalidParameter { name: "eta_max", constraint: "must be positive".into() });
        }
        Ok(())
    }

    /// `min(period / 4)` over periodic axes, and a quarter of the valid extent on bounded ones.
    pub fn default_eta_max(field: &Field) -> f64 {
        (0..field.dim())
            .map(|a| {
                let (lo, hi) = field.valid[a];
                let extent = (hi - lo) as f64 * field.spacing[a];
                extent / 4.0
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovNorm {
    pub lp: f64,
    pub seminorm: f64,
    pub total: f64,
    /// Shift (in samples) attaining the seminorm.
    pub worst_shift: Vec<isize>,
    pub shifts: usize,
}

/// Integer shift vectors with `0 < |eta| <= eta_max`.
pub fn admitted_shifts(spacing: &[f64], eta_max: f64) -> Vec<Vec<isize>> {
    let reach: Vec<isize> = spacing.iter().map(|h| (eta_max / h * (1.0 + 1e-12)).floor() as isize).collect();
    let mut out = Vec::new();
    let mut cur: Vec<isize> = reach.iter().map(|r| -r).collect();
    loop {
        let len2: f64 = cur.iter().zip(spacing).map(|(&k, h)| (k as f64 * h).powi(2)).sum();
        if len2 > 0.0 && len2.sqrt() <= eta_max * (1.0 + 1e-12) {
            out.push(cur.clone());
        }
        let mut a = cur.len();
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            cur[a] += 1;
            if cur[a] <= reach[a] {
                break;
            }
            cur[a] = -reach[a];
        }
    }
}

/// Besov norm of a vector field (components share geometry) on `Q`.
///
/// `Q` is the valid region, shrunk on bounded axes by the largest shift so
/// that `Q + eta` stays inside the data for every admitted `eta`. An explicit
/// sub-box may be passed as `region`.
pub fn besov_norm(components: &[&Field], window: &BesovWindow, region: Option<&[(usize, usize)]>) -> Result<BesovNorm> {
    window.validate()?;
    let f0 = components.first().ok_or_else(|| Error::InsufficientData("no components".into()))?;
    if components.iter().any(|c| c.shape != f0.shape) {
        return Err(Error::Misaligned("components differ in shape".into()));
    }
    let shifts = admitted_shifts(&f0.spacing, window.eta_max);
    if shifts.is_empty() {
        return Err(Error::Window(format!("no grid shift with 0 < |eta| <= {}", window.eta_max)));
    }
    let d = f0.dim();
    let mut valid: Vec<(usize, usize)> = (0..d)
        .map(|a| components.iter().fold(f0.valid[a], |acc, c| (acc.0.max(c.valid[a].0), acc.1.min(c.valid[a].1))))
        .collect();
    for a in 0..d {
        if !f0.periodic[a] {
            let m = shifts.iter().map(|s| s[a].unsigned_abs()).max().unwrap_or(0);
            valid[a] = (valid[a].0 + m, valid[a].1.saturating_sub(m));
        }
    }
    let q: Vec<(usize, usize)> = match region {
        Some(r) => {
            for a in 0..d {
                if r[a].0 < valid[a].0 || r[a].1 > valid[a].1 {
                    return Err(Error::Window(format!("region axis {a} leaves the admissible window {:?}", valid[a])));
                }
            }
            r.to_vec()
        }
        None => valid,
    };
    let idx = f0.region_indices(&q);
    if idx.is_empty() {
        return Err(Error::Window("window Q is empty".into()));
    }
    let lp = lp_norm(components, window.p, &idx);
    let vol = f0.cell_volume();
    let strides: Vec<usize> = (0..d).map(|a| f0.stride(a)).collect();
    let multi: Vec<Vec<usize>> = idx.iter().map(|&i| f0.multi_index(i)).collect();
    let (seminorm, worst) = shifts
        .par_iter()
        .map(|s| {
            let len: f64 = s.iter().zip(&f0.spacing).map(|(&k, h)| (k as f64 * h).powi(2)).sum::<f64>().sqrt();
            let mut acc = 0.0;
            for (n, &i) in idx.iter().enumerate() {
                let mut j = 0usize;
                for a in 0..d {
                    let k = multi[n][a] as isize + s[a];
                    let k = if f0.periodic[a] { k.rem_euclid(f0.shape[a] as isize) } else { k } as usize;
                    j += k * strides[a];
                }
                let diff2: f64 = components.iter().map(|c| (c.data[j] - c.data[i]).powi(2)).sum();
                acc += diff2.sqrt().powf(window.p);
            }
            ((acc * vol).powf(1.0 / window.p) / len.powf(window.alpha), s.clone())
        })
        .reduce(|| (0.0, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    Ok(BesovNorm { lp, seminorm, total: lp + seminorm, worst_shift: worst, shifts: shifts.len() })
}
