//! Discrete convolution with a product bump kernel.
//!
//! Per axis the kernel is `exp(-1 / (1 - y^2))` with `y = x / a`,
//! `a = epsilon / sqrt(d)`, so the support of the product lies in the
//! open ball of radius `epsilon`. Taps are renormalised to unit sum;
//! derivative taps are renormalised to be exact on linear data and applied
//! in antisymmetric pairs so constants map to exactly zero.

use rayon::prelude::*;

use super::field::Field;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mollifier {
    pub epsilon: f64,
    /// `smooth[axis][k]` is the weight at offset `k` (k = 0..=K).
    smooth: Vec<Vec<f64>>,
    /// `deriv[axis][k]` for k = 1..=K (index 0 unused).
    deriv: Vec<Vec<f64>>,
}

fn bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn bump_prime(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - y * y;
        -2.0 * y / (q * q) * (-1.0 / q).exp()
    }
}

impl Mollifier {
    /// Kernel of scale `epsilon` for a field with the given spacings.
    pub fn new(epsilon: f64, spacing: &[f64]) -> Result<Self> {
        let d = spacing.len() as f64;
        let a = epsilon / d.sqrt();
        let mut smooth = Vec::new();
        let mut deriv = Vec::new();
        for (axis, &h) in spacing.iter().enumerate() {
            if !(epsilon >= 2.0 * h * (1.0 - 1e-12)) {
                return Err(Error::BelowResolution { epsilon, axis, spacing: h });
            }
            let k_max = ((a / h) * (1.0 - 1e-12)).floor() as usize;
            let taps: Vec<f64> = (0..=k_max).map(|k| bump(k as f64 * h / a)).collect();
            let total = taps[0] + 2.0 * taps[1..].iter().sum::<f64>();
            smooth.push(taps.iter().map(|w| w / total).collect());
            // D v(x) = sum_{k>0} w_k (v(x - kh) - v(x + kh)); exact on v = x needs -2h sum k w_k = 1
            let raw: Vec<f64> = (0..=k_max).map(|k| bump_prime(k as f64 * h / a)).collect();
            let moment: f64 = -2.0 * h * (1..=k_max).map(|k| k as f64 * raw[k]).sum::<f64>();
            deriv.push(raw.iter().map(|w| w / moment).collect());
        }
        Ok(Self { epsilon, smooth, deriv })
    }

    pub fn for_field(epsilon: f64, field: &Field) -> Result<Self> {
        Self::new(epsilon, &field.spacing)
    }

    /// Half-width in samples on an axis.
    pub fn reach(&self, axis: usize) -> usize {
        self.smooth[axis].len() - 1
    }

    /// Number of axes the kernel was built for.
    pub fn dim(&self) -> usize {
        self.smooth.len()
    }

    /// Smoothing taps on an axis, offsets `0..=K`.
    pub fn taps(&self, axis: usize) -> &[f64] {
        &self.smooth[axis]
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.dim() != self.dim() {
            return Err(Error::Window(format!("kernel built for {} axes, field has {}", self.dim(), field.dim())));
        }
        for a in 0..field.dim() {
            let (lo, hi) = field.valid[a];
            if !field.periodic[a] && hi - lo <= 2 * self.reach(a) {
                return Err(Error::Window(format!("axis {a}: valid length {} too short for kernel reach {}", hi - lo, self.reach(a))));
            }
            if field.periodic[a] && field.shape[a] < 2 * self.reach(a) + 1 {
                return Err(Error::Window(format!("axis {a}: period shorter than the kernel")));
            }
        }
        Ok(())
    }

    /// `[v]_epsilon`.
    pub fn mollify(&self, field: &Field) -> Result<Field> {
        self.check(field)?;
        let mut out = field.clone();
        for a in 0..field.dim() {
            out = convolve_axis(&out, a, &self.smooth[a], false);
        }
        Ok(out)
    }

    /// `d/dy_axis [v]_epsilon`, differentiating the kernel.
    pub fn derivative(&self, field: &Field, axis: usize) -> Result<Field> {
        self.check(field)?;
        let mut out = field.clone();
        for a in 0..field.dim() {
            out = if a == axis {
                convolve_axis(&out, a, &self.deriv[a], true)
            } else {
                convolve_axis(&out, a, &self.smooth[a], false)
            };
        }
        Ok(out)
    }
}

/// Symmetric (or antisymmetric) convolution along one axis.
fn convolve_axis(field: &Field, axis: usize, taps: &[f64], odd: bool) -> Field {
    let n = field.shape[axis];
    let stride = field.stride(axis);
    let k_max = taps.len() - 1;
    let periodic = field.periodic[axis];
    let (lo, hi) = field.valid[axis];
    let (new_lo, new_hi) = if periodic { (lo, hi) } else { (lo + k_max, hi - k_max) };
    let mut out = field.clone();
    out.valid[axis] = (new_lo, new_hi);
    let src = &field.data;
    let outer = field.len() / (n * stride);
    out.data.par_chunks_mut(n * stride).enumerate().for_each(|(o, block)| {
        debug_assert!(o < outer);
        let base = o * n * stride;
        for i in 0..n {
            for inner in 0..stride {
                let at = |j: isize| -> f64 {
                    let j = if periodic { j.rem_euclid(n as isize) as usize } else { j as usize };
                    src[base + j * stride + inner]
                };
                let v = if i < new_lo || i >= new_hi {
                    f64::NAN
                } else {
                    let ii = i as isize;
                    // centred form: constants are reproduced exactly
                    let c = at(ii);
                    let mut acc = 0.0;
                    for (k, &w) in taps.iter().enumerate().skip(1) {
                        let k = k as isize;
                        acc += if odd { w * (at(ii - k) - at(ii + k)) } else { w * ((at(ii - k) - c) + (at(ii + k) - c)) };
                    }
                    if odd {
                        acc
                    } else {
                        c + acc
                    }
                };
                block[i * stride + inner] = v;
            }
        }
    });
    out
}
