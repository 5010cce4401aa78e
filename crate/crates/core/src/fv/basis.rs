use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Cos,
    Sin,
}

/// `theta(t) = (1 - (t/T_b)^2)^2` on `[0, T_b)` and zero afterwards; C^1 on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalBump {
    pub support_end: f64,
}

impl TemporalBump {
    pub fn value(&self, t: f64) -> f64 {
        let s = t / self.support_end;
        if s >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s * s;
            q * q
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = t / self.support_end;
        if s >= 1.0 {
            0.0
        } else {
            -4.0 * s * (1.0 - s * s) / self.support_end
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub wavenumber: [i32; 3],
    pub part: Part,
    pub bump: TemporalBump,
}

/// Trigonometric modes `exp(i pi k.x / L)` up to `|k|_inf <= k_max` times temporal bumps.
#[derive(Debug, Clone)]
pub struct TestFunctionBasis {
    half_periods: Vec<f64>,
    members: Vec<TestFunction>,
}

impl TestFunctionBasis {
    /// One member per (mode, real/imaginary part, bump); `k` and `-k` are not both listed.
    pub fn new(grid: &TorusGrid, k_max: u32, bumps: &[TemporalBump]) -> Result<Self> {
        if bumps.is_empty() {
            return Err(Error::InvalidParameter { name: "bumps", constraint: "at least one temporal bump".into() });
        }
        if let Some(b) = bumps.iter().find(|b| !(b.support_end > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "bumps",
                constraint: format!("support end {} must be positive", b.support_end),
            });
        }
        let dim = grid.dim();
        let k = k_max as i32;
        let mut modes = Vec::new();
        let range = |active: bool| if active { -k..=k } else { 0..=0 };
        for k0 in range(true) {
            for k1 in range(dim > 1) {
                for k2 in range(dim > 2) {
                    let kv = [k0, k1, k2];
                    // keep the half space whose first nonzero component is positive
                    match kv.iter().find(|&&c| c != 0) {
                        None => modes.push((kv, Part::Cos)),
                        Some(&c) if c > 0 => {
                            modes.push((kv, Part::Cos));
                            modes.push((kv, Part::Sin));
                        }
                        _ => {}
                    }
                }
            }
        }
        let members = bumps
            .iter()
            .flat_map(|&bump| modes.iter().map(move |&(wavenumber, part)| TestFunction { wavenumber, part, bump }))
            .collect();
        Ok(Self { half_periods: grid.half_periods().to_vec(), members })
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn phase(&self, f: &TestFunction, x: &[f64; 3]) -> (f64, [f64; 3]) {
        let mut phase = 0.0;
        let mut dphase = [0.0; 3];
        for (axis, l) in self.half_periods.iter().enumerate() {
            let w = PI * f.wavenumber[axis] as f64 / l;
            phase += w * x[axis];
            dphase[axis] = w;
        }
        (phase, dphase)
    }

    /// Spatial factor and its gradient at `x`.
    pub fn spatial(&self, f: &TestFunction, x: &[f64; 3]) -> (f64, [f64; 3]) {
        let (phase, dphase) = self.phase(f, x);
        let (s, c) = phase.sin_cos();
        let (v, dv) = match f.part {
            Part::Cos => (c, -s),
            Part::Sin => (s, c),
        };
        (v, dphase.map(|w| w * dv))
    }

    /// `phi(t, x)`, `d_t phi` and `grad_x phi`.
    pub fn evaluate(&self, f: &TestFunction, t: f64, x: &[f64; 3]) -> (f64, f64, [f64; 3]) {
        let (psi, grad) = self.spatial(f, x);
        let th = f.bump.value(t);
        (th * psi, f.bump.derivative(t) * psi, grad.map(|g| th * g))
    }
}
