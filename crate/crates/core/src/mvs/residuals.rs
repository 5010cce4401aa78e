use super::measure::observables;
use super::solution::{DissipativeSolution, MvsSnapshot};
use crate::error::Result;
use crate::fields::PressureLaw;
use crate::fv::{weak_defects, ResidualPair, TestFunctionBasis, WeakFields};

/// Barycenters, `<V; m (x) m / rho> + int xi (x) xi dC_conv` and `<V; p> + C_press`.
fn weak_fields(law: &PressureLaw, snap: &MvsSnapshot) -> Result<WeakFields> {
    let dim = snap.measure.dim;
    let (rho, momentum) = snap.measure.barycenter();
    let mut convection = vec![vec![Vec::new(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut young = snap.measure.moment(observables::convection(i, j))?;
            for (c, v) in young.iter_mut().enumerate() {
                *v += snap.defects.convective_tensor(c, i, j);
            }
            convection[i][j] = young;
        }
    }
    let mut pressure = snap.measure.moment(observables::pressure(law))?;
    for (v, d) in pressure.iter_mut().zip(&snap.defects.c_press) {
        *v += d;
    }
    Ok(WeakFields { time: snap.time, rho, momentum, convection, pressure })
}

/// Continuity and momentum defects of the measure-valued identities, per test function.
///
/// The defect algebra is checked first.
pub fn mvs_residuals(sol: &DissipativeSolution, basis: &TestFunctionBasis, tau: f64) -> Result<Vec<ResidualPair>> {
    sol.validate()?;
    let initial = weak_fields(&sol.law, &sol.initial)?;
    let snaps = sol.snapshots.iter().map(|s| weak_fields(&sol.law, s)).collect::<Result<Vec<_>>>()?;
    weak_defects(&sol.grid, &initial, &snaps, basis, tau)
}
