use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Quadrature on the unit sphere `S^{N-1}`, exact for `xi (x) xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub dim: usize,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl DirectionSet {
    /// `{-1, +1}` in 1D, 32 equispaced angles in 2D, the 42-point icosahedral set in 3D.
    pub fn for_dim(dim: usize) -> Result<Self> {
        let directions: Vec<[f64; 3]> = match dim {
            1 => vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            2 => (0..32)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / 32.0;
                    [th.cos(), th.sin(), 0.0]
                })
                .collect(),
            3 => icosahedral_42(),
            _ => return Err(Error::Domain(format!("no direction set in dimension {dim}"))),
        };
        let area = match dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let w = area / directions.len() as f64;
        let weights = vec![w; directions.len()];
        Ok(Self { dim, directions, weights })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `sum_k w_k f(xi_k)`.
    pub fn integrate<F: Fn(&[f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(d, w)| w * f(d)).sum()
    }
}

fn icosahedral_42() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = Vec::with_capacity(12);
    for &a in &[-1.0, 1.0] {
        for &b in &[-phi, phi] {
            v.push([0.0, a, b]);
            v.push([a, b, 0.0]);
            v.push([b, 0.0, a]);
        }
    }
    let norm = |p: [f64; 3]| {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] / n, p[1] / n, p[2] / n]
    };
    let edge2 = 4.0;
    let mut out: Vec<[f64; 3]> = v.iter().map(|&p| norm(p)).collect();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d2: f64 = (0..3).map(|k| (v[i][k] - v[j][k]).powi(2)).sum();
            if (d2 - edge2).abs() < 1e-9 {
                out.push(norm([v[i][0] + v[j][0], v[i][1] + v[j][1], v[i][2] + v[j][2]]));
            }
        }
    }
    out
}

/// Absolutely continuous concentration defects at one time stamp.
///
/// `c_conv[k][cell]` is the density of the convective defect in direction
/// `k` with respect to the direction quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectMeasures {
    pub directions: DirectionSet,
    pub c_conv: Vec<Vec<f64>>,
    pub c_int: Vec<f64>,
    pub c_kin: Vec<f64>,
    pub c_press: Vec<f64>,
}

/// Tolerance for the kinetic identity.
pub const ALGEBRA_TOLERANCE: f64 = 1e-12;

impl DefectMeasures {
    /// Builds `c_kin` and `c_press` from `c_conv` and `c_int`.
    pub fn new(directions: DirectionSet, c_conv: Vec<Vec<f64>>, c_int: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = c_int.len();
        if c_conv.len() != directions.len() || c_conv.iter().any(|c| c.len() != n) {
            return Err(Error::Misaligned("convective defect does not match directions and cells".into()));
        }
        if c_conv.iter().flatten().chain(&c_int).any(|&v| !(v >= 0.0)) {
            return Err(Error::DefectAlgebra("defect densities must be nonnegative".into()));
        }
        let c_kin = (0..n)
            .map(|c| 0.5 * directions.weights.iter().zip(&c_conv).map(|(w, f)| w * f[c]).sum::<f64>())
            .collect();
        let c_press = c_int.iter().map(|&v| (gamma - 1.0) * v).collect();
        Ok(Self { directions, c_conv, c_int, c_kin, c_press })
    }

    pub fn zero(dim: usize, cells: usize, gamma: f64) -> Result<Self> {
        let directions = DirectionSet::for_dim(dim)?;
        let k = directions.len();
        Self::new(directions, vec![vec![0.0; cells]; k], vec![0.0; cells], gamma)
    }

    /// Same convective density `c(x)` in every direction.
    pub fn isotropic(dim: usize, c_conv: Vec<f64>, c_int: Vec<f64>, gamma: f64) -> Result<Self> {
        let directions = DirectionSet::for_dim(dim)?;
        let k = directions.len();
        Self::new(directions, vec![c_conv; k], c_int, gamma)
    }

    pub fn len(&self) -> usize {
        self.c_int.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_int.is_empty()
    }

    /// Independent re-check of `c_press = (gamma - 1) c_int` and
    /// `c_kin = 1/2 sum_k w_k c_conv`.
    pub fn check_algebra(&self, gamma: f64) -> Result<()> {
        for c in 0..self.len() {
            let press = (gamma - 1.0) * self.c_int[c];
            if self.c_press[c] != press {
                return Err(Error::DefectAlgebra(format!(
                    "cell {c}: c_press = {} but (gamma - 1) c_int = {press}",
                    self.c_press[c]
                )));
            }
            let kin: f64 = 0.5 * self.directions.weights.iter().zip(&self.c_conv).map(|(w, f)| w * f[c]).sum::<f64>();
            if (self.c_kin[c] - kin).abs() > ALGEBRA_TOLERANCE * (1.0 + kin.abs()) {
                return Err(Error::DefectAlgebra(format!("cell {c}: c_kin = {} but half the sphere integral is {kin}", self.c_kin[c])));
            }
            let negative = self.c_kin[c] < 0.0
                || self.c_int[c] < 0.0
                || self.c_press[c] < 0.0
                || self.c_conv.iter().any(|f| f[c] < 0.0);
            if negative {
                return Err(Error::DefectAlgebra(format!("cell {c}: negative defect density")));
            }
        }
        Ok(())
    }

    /// `int xi_i xi_j dC_conv` at a cell.
    pub fn convective_tensor(&self, cell: usize, i: usize, j: usize) -> f64 {
        self.directions
            .directions
            .iter()
            .zip(&self.directions.weights)
            .zip(&self.c_conv)
            .map(|((xi, w), f)| w * xi[i] * xi[j] * f[cell])
            .sum()
    }
}
