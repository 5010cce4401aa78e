use crate::error::{Error, Result};
use crate::fields::{FluidState, TorusGrid, Trajectory};

/// Scalar samples on a uniform box, row-major with axis 0 slowest.
///
/// Axes may be periodic (torus directions) or bounded (time). Values
/// outside `valid` are NaN; operations that shrink the domain (mollifying
/// along a bounded axis) shrink `valid` instead of padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub periodic: Vec<bool>,
    pub valid: Vec<(usize, usize)>,
    pub data: Vec<f64>,
}

impl Field {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, periodic: Vec<bool>, data: Vec<f64>) -> Result<Self> {
        let d = shape.len();
        if d == 0 || spacing.len() != d || periodic.len() != d {
            return Err(Error::InvalidGrid("shape, spacing and periodicity must have one entry per axis".into()));
        }
        if shape.contains(&0) || spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidGrid("empty axis or non-positive spacing".into()));
        }
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::InvalidGrid(format!("{} samples for shape {shape:?}", data.len())));
        }
        let valid = shape.iter().map(|&n| (0, n)).collect();
        Ok(Self { shape, spacing, periodic, valid, data })
    }

    /// Field on a torus grid (all axes periodic).
    pub fn on_grid(grid: &TorusGrid, data: Vec<f64>) -> Result<Self> {
        let spacing = (0..grid.dim()).map(|a| grid.spacing(a)).collect();
        Self::new(grid.cells().to_vec(), spacing, vec![true; grid.dim()], data)
    }

    /// Space-time field: axis 0 is time over the trajectory's stamps
    /// (which must be uniform), the remaining axes are the torus.
    pub fn space_time<F>(traj: &Trajectory, f: F) -> Result<Self>
    where
        F: Fn(&FluidState) -> Vec<f64>,
    {
        let times = traj.times();
        if times.len() < 2 {
            return Err(Error::InsufficientData("space-time field needs at least two time stamps".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
            return Err(Error::Misaligned("space-time fields need uniform time stamps; resample first".into()));
        }
        let mut shape = vec![times.len()];
        shape.extend_from_slice(traj.grid.cells());
        let mut spacing = vec![dt];
        spacing.extend((0..traj.grid.dim()).map(|a| traj.grid.spacing(a)));
        let mut periodic = vec![false];
        periodic.extend(std::iter::repeat_n(true, traj.grid.dim()));
        let mut data = Vec::with_capacity(shape.iter().product());
        for s in &traj.states {
            let v = f(s);
            if v.len() != traj.grid.len() {
                return Err(Error::Misaligned("per-state field has the wrong length".into()));
            }
            data.extend(v);
        }
        Self::new(shape, spacing, periodic, data)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.shape[a];
            idx /= self.shape[a];
        }
        out
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.multi_index(idx).iter().zip(&self.valid).all(|(&i, &(lo, hi))| i >= lo && i < hi)
    }

    /// Flat indices of the valid region.
    pub fn valid_indices(&self) -> Vec<usize> {
        self.region_indices(&self.valid)
    }

    /// Flat indices of a box `[lo, hi)` per axis.
    pub fn region_indices(&self, region: &[(usize, usize)]) -> Vec<usize> {
        let mut out = Vec::new();
        let d = self.dim();
        if region.iter().any(|&(lo, hi)| lo >= hi) {
            return out;
        }
        let mut idx: Vec<usize> = region.iter().map(|r| r.0).collect();
        loop {
            out.push(idx.iter().enumerate().map(|(a, &i)| i * self.stride(a)).sum());
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < region[a].1 {
                    break;
                }
                idx[a] = region[a].0;
            }
        }
    }

    /// Same geometry, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        Self { data, ..self.clone() }
    }

    /// Pointwise map; NaN stays NaN.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.with_data(self.data.iter().map(|&v| if v.is_nan() { v } else { f(v) }).collect())
    }

    /// Pointwise combination of two fields of equal geometry; the valid region is the intersection.
    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Misaligned(format!("shapes {:?} and {:?}", self.shape, other.shape)));
        }
        let valid: Vec<(usize, usize)> = self
            .valid
            .iter()
            .zip(&other.valid)
            .map(|(a, b)| (a.0.max(b.0), a.1.min(b.1)))
            .collect();
        let mut out = Self { valid, ..self.clone() };
        out.data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        for i in 0..out.len() {
            if !out.is_valid(i) {
                out.data[i] = f64::NAN;
            }
        }
        Ok(out)
    }

    /// Restrict the valid region to a sub-box.
    pub fn restricted(&self, region: &[(usize, usize)]) -> Result<Self> {
        if region.len() != self.dim() {
            return Err(Error::Window("region rank mismatch".into()));
        }
        let mut out = self.clone();
        for (a, &(lo, hi)) in region.iter().enumerate() {
            let (vlo, vhi) = self.valid[a];
            if lo < vlo || hi > vhi || lo >= hi {
                return Err(Error::Window(format!("axis {a}: [{lo}, {hi}) not inside valid [{vlo}, {vhi})")));
            }
            out.valid[a] = (lo, hi);
        }
        for i in 0..out.len() {
            if !out.is_valid(i) {
                out.data[i] = f64::NAN;
            }
        }
        Ok(out)
    }

    /// Every other sample along each axis (axes with odd length drop the last sample).
    pub fn coarsened(&self) -> Result<Self> {
        let shape: Vec<usize> = self.shape.iter().map(|&n| n / 2).collect();
        if shape.iter().any(|&n| n < 2) {
            return Err(Error::InsufficientData("field too small to coarsen".into()));
        }
        let spacing = self.spacing.iter().map(|h| 2.0 * h).collect();
        let mut out = Field::new(shape.clone(), spacing, self.periodic.clone(), vec![0.0; shape.iter().product()])?;
        for i in 0..out.len() {
            let mi = out.multi_index(i);
            let src: usize = mi.iter().enumerate().map(|(a, &k)| 2 * k * self.stride(a)).sum();
            out.data[i] = self.data[src];
        }
        out.valid = self.valid.iter().map(|&(lo, hi)| (lo.div_ceil(2), hi / 2)).collect();
        for i in 0..out.len() {
            if !out.is_valid(i) {
                out.data[i] = f64::NAN;
            }
        }
        Ok(out)
    }

    /// Largest and smallest valid value.
    pub fn range(&self) -> (f64, f64) {
        self.data
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// `(sum_Q |v|^p dV)^{1/p}` of a vector field given by components.
pub fn lp_norm(components: &[&Field], p: f64, region: &[usize]) -> f64 {
    let vol = components[0].cell_volume();
    let sum: f64 = region
        .iter()
        .map(|&i| {
            let s: f64 = components.iter().map(|f| f.data[i] * f.data[i]).sum();
            s.sqrt().powf(p)
        })
        .sum();
    (sum * vol).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_enumeration() {
        let f = Field::new(vec![3, 4], vec![1.0, 1.0], vec![false, true], vec![0.0; 12]).unwrap();
        assert_eq!(f.region_indices(&[(1, 3), (2, 4)]), vec![6, 7, 10, 11]);
        assert_eq!(f.valid_indices().len(), 12);
        assert!(f.region_indices(&[(1, 1), (0, 4)]).is_empty());
    }

    #[test]
    fn coarsening_keeps_even_samples() {
        let f = Field::new(vec![8], vec![0.5], vec![true], (0..8).map(|i| i as f64).collect()).unwrap();
        let c = f.coarsened().unwrap();
        assert_eq!(c.data, vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(c.spacing, vec![1.0]);
    }
}
