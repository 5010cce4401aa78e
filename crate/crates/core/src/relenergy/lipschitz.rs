//! One-sided Lipschitz bound `D(t)` of a velocity field.
//!
//! `D(t) = max(0, -min_x lambda_min(sym grad [U]_eps))`, evaluated with a
//! spatial mollifier of scale `eps_D` on each snapshot.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{FluidState, TorusGrid};
use crate::mvs::DirectionSet;
use crate::regularity::{Field, Mollifier};

/// Smallest eigenvalue of a symmetric matrix of size 1, 2 or 3.
pub fn min_eigenvalue(s: &[[f64; 3]; 3], dim: usize) -> f64 {
    match dim {
        1 => s[0][0],
        2 => {
            let m = 0.5 * (s[0][0] + s[1][1]);
            let d = 0.5 * (s[0][0] - s[1][1]);
            m - (d * d + s[0][1] * s[0][1]).sqrt()
        }
        _ => {
            let p1 = s[0][1].powi(2) + s[0][2].powi(2) + s[1][2].powi(2);
            let q = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
            if p1 == 0.0 {
                return s[0][0].min(s[1][1]).min(s[2][2]);
            }
            let p2 = (s[0][0] - q).powi(2) + (s[1][1] - q).powi(2) + (s[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| (s[i][j] - if i == j { q } else { 0.0 }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let phi = (0.5 * det).clamp(-1.0, 1.0).acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
        }
    }
}

/// Velocity snapshots `U[d][cell]` of a reference, with time stamps.
#[derive(Debug, Clone)]
pub struct VelocitySeries {
    pub times: Vec<f64>,
    pub velocity: Vec<Vec<Vec<f64>>>,
}

impl VelocitySeries {
    pub fn from_states(states: &[FluidState]) -> Self {
        let velocity = states
            .iter()
            .map(|s| s.momentum.iter().map(|m| m.iter().zip(&s.rho).map(|(m, r)| if *r > 0.0 { m / r } else { 0.0 }).collect()).collect())
            .collect();
        Self { times: states.iter().map(|s| s.time).collect(), velocity }
    }
}

/// Cells considered by the estimator: all, or those whose kernel support stays in `|x_i| <= half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    Torus,
    Centered { half_width: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct OneSidedLipschitz {
    pub epsilon: f64,
    pub region: Region,
    pub times: Vec<f64>,
    pub d: Vec<f64>,
}

impl OneSidedLipschitz {
    /// Trapezoid `sum D dt` over stamps at or after `from`.
    pub fn integral_from(&self, from: f64) -> f64 {
        let mut sum = 0.0;
        for k in 1..self.times.len() {
            if self.times[k - 1] >= from - 1e-12 {
                sum += 0.5 * (self.d[k] + self.d[k - 1]) * (self.times[k] - self.times[k - 1]);
            }
        }
        sum
    }

    pub fn integral(&self) -> f64 {
        self.integral_from(f64::NEG_INFINITY)
    }
}

/// `partial_a [U_b]_eps` for every axis pair, `grad[a][b]`.
fn mollified_gradient(grid: &TorusGrid, velocity: &[Vec<f64>], m: &Mollifier) -> Result<Vec<Vec<Field>>> {
    let dim = grid.dim();
    let fields: Vec<Field> = velocity.iter().map(|u| Field::on_grid(grid, u.clone())).collect::<Result<_>>()?;
    (0..dim).map(|a| fields.iter().map(|f| m.derivative(f, a)).collect::<Result<Vec<_>>>()).collect()
}

fn in_region(grid: &TorusGrid, cell: usize, region: Region, eps: f64) -> bool {
    match region {
        Region::Torus => true,
        Region::Centered { half_width } => {
            let x = grid.coords(cell);
            (0..grid.dim()).all(|a| x[a].abs() + eps <= half_width)
        }
    }
}

/// `D` per snapshot.
pub fn estimate_d(grid: &TorusGrid, series: &VelocitySeries, eps: f64, region: Region) -> Result<OneSidedLipschitz> {
    let spacing: Vec<f64> = (0..grid.dim()).map(|a| grid.spacing(a)).collect();
    let m = Mollifier::new(eps, &spacing)?;
    let dim = grid.dim();
    let cells: Vec<usize> = (0..grid.len()).filter(|&c| in_region(grid, c, region, eps)).collect();
    if cells.is_empty() {
        return Err(Error::Window(format!("no cell lies in {region:?} at eps_D = {eps}")));
    }
    let d = series
        .velocity
        .par_iter()
        .map(|u| {
            let g = mollified_gradient(grid, u, &m)?;
            let mut lowest = f64::INFINITY;
            for &c in &cells {
                let mut s = [[0.0; 3]; 3];
                for a in 0..dim {
                    for b in 0..dim {
                        s[a][b] = 0.5 * (g[a][b].data[c] + g[b][a].data[c]);
                    }
                }
                lowest = lowest.min(min_eigenvalue(&s, dim));
            }
            Ok((-lowest).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OneSidedLipschitz { epsilon: eps, region, times: series.times.clone(), d })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakLipschitzCheck {
    /// Smallest `(int phi xi.grad U.xi + D int phi) / int phi` over bumps, directions and stamps.
    pub worst: f64,
    pub worst_time: f64,
    pub bumps: usize,
    pub pass: bool,
}

/// Weak form: `-int (U.xi)(xi.grad phi) + D |xi|^2 int phi >= 0` for `cos^2` bumps of half-width `width`.
pub fn weak_lipschitz_check(grid: &TorusGrid, series: &VelocitySeries, est: &OneSidedLipschitz, width: f64, tol: f64) -> Result<WeakLipschitzCheck> {
    let dim = grid.dim();
    let dirs = DirectionSet::for_dim(dim)?;
    let stride: Vec<usize> = (0..dim).map(|a| ((0.5 * width / grid.spacing(a)).round() as usize).max(1)).collect();
    let mut centres = Vec::new();
    for c in 0..grid.len() {
        let mi = grid.multi_index(c);
        if (0..dim).all(|a| mi[a].is_multiple_of(stride[a])) && in_region(grid, c, est.region, width) {
            centres.push(c);
        }
    }
    if centres.is_empty() {
        return Err(Error::Window("no bump fits the region".into()));
    }
    let wrap = |a: usize, dx: f64| {
        let l = grid.half_periods()[a];
        (dx + l).rem_euclid(2.0 * l) - l
    };
    let vol = grid.cell_volume();
    let results: Vec<(f64, f64)> = series
        .velocity
        .par_iter()
        .zip(&est.d)
        .zip(&series.times)
        .map(|((u, &d), &t)| {
            let mut worst = f64::INFINITY;
            for &c0 in &centres {
                let x0 = grid.coords(c0);
                let mut mass = 0.0;
                let mut terms = vec![0.0; dirs.directions.len()];
                for c in 0..grid.len() {
                    let x = grid.coords(c);
                    let mut phi = 1.0;
                    let mut grad = [0.0; 3];
                    let mut factors = [0.0; 3];
                    let mut dfactors = [0.0; 3];
                    let mut inside = true;
                    for a in 0..dim {
                        let y = wrap(a, x[a] - x0[a]) / width;
                        if y.abs() >= 1.0 {
                            inside = false;
                            break;
                        }
                        let k = 0.5 * PI * y;
                        factors[a] = k.cos().powi(2);
                        dfactors[a] = -PI / width * k.cos() * k.sin();
                    }
                    if !inside {
                        continue;
                    }
                    for a in 0..dim {
                        phi *= factors[a];
                        grad[a] = dfactors[a] * (0..dim).filter(|&b| b != a).map(|b| factors[b]).product::<f64>();
                    }
                    mass += phi * vol;
                    for (k, xi) in dirs.directions.iter().enumerate() {
                        let ux: f64 = (0..dim).map(|a| u[a][c] * xi[a]).sum();
                        let gx: f64 = (0..dim).map(|a| grad[a] * xi[a]).sum();
                        terms[k] -= ux * gx * vol;
                    }
                }
                for term in terms {
                    worst = worst.min(term / mass + d);
                }
            }
            (worst, t)
        })
        .collect();
    let (worst, worst_time) = results.into_iter().fold((f64::INFINITY, 0.0), |acc, r| if r.0 < acc.0 { r } else { acc });
    Ok(WeakLipschitzCheck { worst, worst_time, bumps: centres.len(), pass: worst >= -tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PressureLaw;
    use crate::riemann::{TorusRiemann, TorusRiemannSpec, RiemannData};

    #[test]
    fn eigenvalues() {
        let s2 = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0; 3]];
        assert!((min_eigenvalue(&s2, 2) - 1.0).abs() < 1e-14);
        let s3 = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        assert!((min_eigenvalue(&s3, 3) - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        let diag = [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        assert_eq!(min_eigenvalue(&diag, 3), -1.0);
    }

    #[test]
    fn uniform_velocity_has_zero_d() {
        let grid = TorusGrid::cube(2, 32, 1.0).unwrap();
        let series = VelocitySeries { times: vec![0.0, 1.0], velocity: vec![vec![vec![0.3; 1024], vec![-0.2; 1024]]; 2] };
        let est = estimate_d(&grid, &series, 4.0 * grid.spacing(0), Region::Torus).unwrap();
        assert_eq!(est.d, vec![0.0, 0.0]);
        assert_eq!(est.integral(), 0.0);
    }

    #[test]
    fn compressive_sine_has_known_d() {
        let n = 512;
        let grid = TorusGrid::new(vec![n], vec![1.0]).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (PI * grid.center(0, i)).sin()).collect();
        let series = VelocitySeries { times: vec![0.0], velocity: vec![vec![u]] };
        let est = estimate_d(&grid, &series, 4.0 * grid.spacing(0), Region::Torus).unwrap();
        assert!((est.d[0] - PI).abs() < 1e-3, "{}", est.d[0]);
        let weak = weak_lipschitz_check(&grid, &series, &est, 0.1, 1e-6).unwrap();
        assert!(weak.pass, "{weak:?}");
        let none = OneSidedLipschitz { d: vec![0.0], ..est };
        assert!(!weak_lipschitz_check(&grid, &series, &none, 0.1, 1e-6).unwrap().pass);
    }

    #[test]
    fn rarefaction_fan_has_zero_d_and_shock_diverges() {
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let grid = TorusGrid::new(vec![512], vec![2.0]).unwrap();
        let h = grid.spacing(0);
        let rare = TorusRiemann::new(&law, &RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap(), &TorusRiemannSpec::default(), &grid).unwrap();
        let series = VelocitySeries::from_states(&rare.states(&[0.05, 0.1, 0.2]).unwrap());
        let fan = estimate_d(&grid, &series, 4.0 * h, Region::Centered { half_width: rare.fan_window() }).unwrap();
        assert!(fan.d.iter().all(|&d| d <= 1e-8), "{:?}", fan.d);
        let shock = TorusRiemann::new(&law, &RiemannData::new(2.0, 0.0, 1.0, 0.0).unwrap(), &TorusRiemannSpec::default(), &grid).unwrap();
        let series = VelocitySeries::from_states(&shock.states(&[0.1, 0.2]).unwrap());
        let region = Region::Centered { half_width: shock.fan_window() };
        let fine = estimate_d(&grid, &series, 2.0 * h, region).unwrap();
        let coarse = estimate_d(&grid, &series, 8.0 * h, region).unwrap();
        assert!(fine.d[1] >= 3.0 * coarse.d[1], "{} vs {}", fine.d[1], coarse.d[1]);
    }
}
