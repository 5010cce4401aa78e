use rayon::prelude::*;
use serde::Serialize;

use super::measure::observables;
use super::solution::DissipativeSolution;
use crate::error::{Error, Result};
use crate::fields::Trajectory;
use crate::relenergy::terms::{mollify_reference, quadratic_weight, time_weights};
use crate::relenergy::{rhs_terms_r5, R5Blocks};

/// Space-time integrals of the right-hand side of the dissipative relative energy inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct D6Blocks {
    pub epsilon: f64,
    pub window: (f64, f64),
    /// `-int <V; rho (v - U).grad U.(v - U)>`
    pub quadratic: f64,
    /// `-int (<V; p(rho)> - p'(r)(rho - r) - p(r)) div U`
    pub pressure: f64,
    pub convective: f64,
    pub time: f64,
    pub continuity: f64,
    pub reference_defect: f64,
    /// `-int grad U : (xi (x) xi) dC_conv`
    pub convective_defect: f64,
    /// `-(gamma - 1) int div U dC_int`
    pub internal_defect: f64,
}

impl D6Blocks {
    pub fn commutators(&self) -> [f64; 3] {
        [self.convective, self.time, self.continuity]
    }

    pub fn total(&self) -> f64 {
        self.quadratic
            + self.pressure
            + self.convective
            + self.time
            + self.continuity
            + self.reference_defect
            + self.convective_defect
            + self.internal_defect
    }
}

/// Blocks over `[s, tau]` against a reference sharing grid and stamps; the commutator
/// blocks are those of the barycenters.
pub fn dissipative_rel_energy_terms(sol: &DissipativeSolution, reference: &Trajectory, eps: f64, s: f64, tau: f64) -> Result<D6Blocks> {
    sol.validate()?;
    let bary = sol.barycenter_trajectory()?;
    let base: R5Blocks = rhs_terms_r5(&bary, reference, eps, s, tau)?;
    let law = sol.law;
    let dim = sol.grid.dim();
    let n = sol.grid.len();
    let mr = mollify_reference(reference, eps)?;
    let weights = time_weights(&reference.times(), mr.r.valid[0], s, tau)?;
    let sums = weights
        .par_iter()
        .map(|&(k, wt)| -> Result<[f64; 4]> {
            let snap = &sol.snapshots[k];
            let pressure = snap.measure.moment(observables::pressure(&law))?;
            let mut acc = [0.0; 4];
            for c in 0..n {
                let i = k * n + c;
                let u: Vec<f64> = (0..dim).map(|b| mr.u[b].data[i]).collect();
                let gu = |a: usize, b: usize| mr.du[b][a + 1].data[i];
                let atoms = &snap.measure.cells[c];
                let mut quad = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        let q: f64 = if let [atom] = atoms.as_slice() {
                            quadratic_weight(atom.rho, &atom.momentum[..dim], &u, a, b)
                        } else {
                            atoms.iter().map(|atom| atom.weight * quadratic_weight(atom.rho, &atom.momentum[..dim], &u, a, b)).sum()
                        };
                        quad -= gu(a, b) * q;
                    }
                }
                let r = mr.r.data[i];
                let rho = bary.states[k].rho[c];
                let div: f64 = (0..dim).map(|a| gu(a, a)).sum();
                let press = -(pressure[c] - law.p_prime(r) * (rho - r) - law.p(r)) * div;
                let mut conv_defect = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        conv_defect -= gu(a, b) * snap.defects.convective_tensor(c, a, b);
                    }
                }
                let int_defect = -(law.gamma - 1.0) * div * snap.defects.c_int[c];
                for (slot, v) in acc.iter_mut().zip([quad, press, conv_defect, int_defect]) {
                    *slot += v * wt;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    if sums.is_empty() {
        return Err(Error::Window("no stamps in window".into()));
    }
    let vol = sol.grid.cell_volume();
    let total = sums.iter().fold([0.0; 4], |x, y| std::array::from_fn(|j| x[j] + y[j]));
    let [quadratic, pressure, convective_defect, internal_defect] = total.map(|v| v * vol);
    Ok(D6Blocks {
        epsilon: eps,
        window: base.window,
        quadratic,
        pressure,
        convective: base.convective,
        time: base.time,
        continuity: base.continuity,
        reference_defect: base.reference_defect,
        convective_defect,
        internal_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{PressureLaw, TorusGrid};
    use crate::fv::{solve, SchemeConfig};
    use crate::mvs::DefectMeasures;
    use crate::riemann::{RiemannData, TorusRiemann, TorusRiemannSpec};

    fn setup(n: usize) -> (Trajectory, Trajectory) {
        let law = PressureLaw::new(1.0, 2.0).unwrap();
        let grid = TorusGrid::new(vec![n], vec![2.0]).unwrap();
        let data = RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap();
        let exact = TorusRiemann::new(&law, &data, &TorusRiemannSpec::default(), &grid).unwrap();
        let init = exact.initial_state().unwrap();
        let cfg = SchemeConfig { end_time: 0.2, output_interval: Some(0.004), ..SchemeConfig::default() };
        let weak = solve(&grid, &law, &init, &cfg).unwrap();
        let reference = exact.trajectory(&weak.times()).unwrap();
        (weak, reference)
    }

    #[test]
    fn atomic_measure_matches_r5_blocks() {
        let (weak, reference) = setup(256);
        let sol = DissipativeSolution::from_trajectory(&weak).unwrap();
        let d6 = dissipative_rel_energy_terms(&sol, &reference, 0.05, 0.06, 0.14).unwrap();
        let r5 = rhs_terms_r5(&weak, &reference, 0.05, 0.06, 0.14).unwrap();
        assert_eq!(d6.convective_defect, 0.0);
        assert_eq!(d6.internal_defect, 0.0);
        assert!((d6.quadratic - r5.quadratic).abs() <= 1e-12 * r5.quadratic.abs().max(1e-3));
        assert!((d6.pressure - r5.pressure).abs() <= 1e-12 * r5.pressure.abs().max(1e-3));
        assert!((d6.total() - r5.total()).abs() <= 1e-12);
    }

    #[test]
    fn isotropic_defects_in_the_fan_dissipate() {
        let (weak, reference) = setup(256);
        let mut sol = DissipativeSolution::from_trajectory(&weak).unwrap();
        let grid = sol.grid.clone();
        for s in &mut sol.snapshots {
            let c: Vec<f64> = (0..grid.len()).map(|i| if grid.center(0, i).abs() < 0.3 { 0.2 } else { 0.0 }).collect();
            s.defects = DefectMeasures::isotropic(1, c.clone(), c, 2.0).unwrap();
        }
        let d6 = dissipative_rel_energy_terms(&sol, &reference, 0.05, 0.06, 0.14).unwrap();
        assert!(d6.convective_defect < 0.0 && d6.internal_defect < 0.0, "{d6:?}");
    }

    #[test]
    fn quadratic_block_is_controlled_by_d() {
        let (weak, reference) = setup(256);
        let b = weak.states[10].clone();
        // two-atom measure around the FV state, barycenter preserved
        let lo = crate::fields::FluidState { time: b.time, rho: b.rho.iter().map(|r| 0.8 * r).collect(), momentum: vec![b.momentum[0].iter().map(|m| m - 0.1).collect()] };
        let hi = crate::fields::FluidState { time: b.time, rho: b.rho.iter().map(|r| 1.2 * r).collect(), momentum: vec![b.momentum[0].iter().map(|m| m + 0.1).collect()] };
        let mut sol = DissipativeSolution::from_trajectory(&weak).unwrap();
        for s in &mut sol.snapshots {
            let lo = crate::fields::FluidState { time: s.time, ..lo.clone() };
            let hi = crate::fields::FluidState { time: s.time, ..hi.clone() };
            s.measure = crate::mvs::YoungMeasure::mixture(&lo, &hi, &vec![0.5; lo.len()]).unwrap();
        }
        let eps = 0.05;
        let d6 = dissipative_rel_energy_terms(&sol, &reference, eps, 0.06, 0.14).unwrap();
        // pointwise: -<rho (v-U)^2> dU/dx >= -D <rho (v-U)^2>, integrated with the same weights
        let mr = mollify_reference(&reference, eps).unwrap();
        let times = reference.times();
        let w = time_weights(&times, mr.r.valid[0], 0.06, 0.14).unwrap();
        let n = sol.grid.len();
        let mut bound = 0.0;
        for &(k, wt) in &w {
            let d = (0..n).map(|c| -mr.du[0][1].data[k * n + c]).fold(0.0, f64::max);
            let u: Vec<f64> = (0..n).map(|c| mr.u[0].data[k * n + c]).collect();
            // kinetic part of the Young relative energy, twice
            let kin: f64 = sol.snapshots[k].measure.cells.iter().enumerate().map(|(c, atoms)| atoms.iter().map(|a| a.weight * quadratic_weight(a.rho, &a.momentum[..1], &u[c..=c], 0, 0)).sum::<f64>()).sum::<f64>() * sol.grid.cell_volume();
            bound += d * kin * wt;
        }
        assert!(d6.quadratic + bound >= -1e-12, "{} vs {bound}", d6.quadratic);
    }
}
