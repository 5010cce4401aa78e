//! Weierstrass-type test fields `W(x) = sum_{k=0}^{K} 2^{-alpha k} cos(2^k pi x)`.

use std::f64::consts::PI;

use super::field::Field;
use crate::fields::TorusGrid;

pub fn weierstrass(x: f64, alpha: f64, k_max: u32) -> f64 {
    (0..=k_max).map(|k| 2f64.powf(-alpha * k as f64) * ((1u64 << k) as f64 * PI * x).cos()).sum()
}

/// Highest octave still resolved by four samples per wavelength on `n` cells of `[-1, 1)`.
pub fn resolved_octaves(n: usize) -> u32 {
    let mut k = 0;
    while (1usize << (k + 1)) <= n / 4 {
        k += 1;
    }
    k
}

/// `W` sampled at the cell centres of `n` cells on the torus `[-1, 1)`.
pub fn weierstrass_1d(n: usize, alpha: f64, k_max: u32) -> Field {
    let h = 2.0 / n as f64;
    let data = (0..n).map(|i| weierstrass(-1.0 + (i as f64 + 0.5) * h, alpha, k_max)).collect();
    Field::new(vec![n], vec![h], vec![true], data).expect("valid 1D field")
}

/// Tensor product `prod_i W(pi-scaled x_i)` on a torus grid (coordinates rescaled to `[-1, 1)` per axis).
pub fn weierstrass_field(grid: &TorusGrid, alpha: f64, k_max: u32) -> Field {
    let data = (0..grid.len())
        .map(|c| {
            let x = grid.coords(c);
            (0..grid.dim()).map(|a| weierstrass(x[a] / grid.half_periods()[a], alpha, k_max)).product()
        })
        .collect();
    Field::on_grid(grid, data).expect("grid field")
}
