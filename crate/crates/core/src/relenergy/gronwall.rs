use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct GronwallCertificate {
    pub times: Vec<f64>,
    pub rel_energy: Vec<f64>,
    pub bound: Vec<f64>,
    pub rate_constant: f64,
    pub slack: f64,
    pub first_violation: Option<usize>,
    pub pass: bool,
}

/// Integral Gronwall envelope `B(t) = (E(s) + slack) exp(c int_s^t D)` over the given stamps.
///
/// The first stamp is `s`; the time integral is the trapezoid rule.
pub fn gronwall_certify(times: &[f64], rel_energy: &[f64], d: &[f64], rate_constant: f64, slack: f64) -> Result<GronwallCertificate> {
    if times.len() != rel_energy.len() || times.len() != d.len() {
        return Err(Error::Misaligned(format!("{} stamps, {} energies, {} D values", times.len(), rel_energy.len(), d.len())));
    }
    if times.is_empty() {
        return Err(Error::InsufficientData("empty relative energy series".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Misaligned("stamps must increase strictly".into()));
    }
    if let Some(v) = d.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("D = {v} must be nonnegative")));
    }
    if !(slack >= 0.0 && rate_constant >= 0.0) {
        return Err(Error::InvalidParameter { name: "slack", constraint: "slack and rate constant must be nonnegative".into() });
    }
    let base = rel_energy[0] + slack;
    let mut integral = 0.0;
    let mut bound = Vec::with_capacity(times.len());
    let mut first_violation = None;
    for k in 0..times.len() {
        if k > 0 {
            integral += 0.5 * (d[k] + d[k - 1]) * (times[k] - times[k - 1]);
        }
        let b = base * (rate_constant * integral).exp();
        bound.push(b);
        let ok = rel_energy[k] <= b * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        if !ok && first_violation.is_none() {
            first_violation = Some(k);
        }
    }
    Ok(GronwallCertificate {
        times: times.to_vec(),
        rel_energy: rel_energy.to_vec(),
        bound,
        rate_constant,
        slack,
        pass: first_violation.is_none(),
        first_violation,
    })
}

/// `max(2, N (gamma - 1))`: the kinetic and pressure parts of the relative energy
/// absorb `D` with these factors.
pub fn rate_constant(dim: usize, gamma: f64) -> f64 {
    2f64.max(dim as f64 * (gamma - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_d_gives_constant_bound() {
        let c = gronwall_certify(&[0.0, 1.0, 2.0], &[1.0, 0.9, 0.95], &[0.0; 3], 2.0, 0.0).unwrap();
        assert_eq!(c.bound, vec![1.0; 3]);
        assert!(c.pass);
        let c = gronwall_certify(&[0.0, 1.0, 2.0], &[1.0, 0.9, 1.1], &[0.0; 3], 2.0, 0.0).unwrap();
        assert_eq!(c.first_violation, Some(2));
    }

    #[test]
    fn degenerate_start() {
        assert!(gronwall_certify(&[0.0, 1.0], &[0.0, 0.0], &[5.0, 5.0], 2.0, 0.0).unwrap().pass);
        assert!(!gronwall_certify(&[0.0, 1.0], &[0.0, 1e-30], &[5.0, 5.0], 2.0, 0.0).unwrap().pass);
    }

    #[test]
    fn exponential_growth_is_covered() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let e: Vec<f64> = t.iter().map(|t| (1.9 * t).exp()).collect();
        assert!(gronwall_certify(&t, &e, &vec![1.0; t.len()], 2.0, 0.0).unwrap().pass);
        assert!(!gronwall_certify(&t, &e, &vec![1.0; t.len()], 1.5, 0.0).unwrap().pass);
    }

    #[test]
    fn bad_inputs() {
        assert!(gronwall_certify(&[0.0, 1.0], &[1.0], &[0.0, 0.0], 2.0, 0.0).is_err());
        assert!(gronwall_certify(&[0.0, 1.0], &[1.0, 1.0], &[0.0, -1.0], 2.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_slack(e in prop::collection::vec(0.0f64..1.0, 5), d in prop::collection::vec(0.0f64..3.0, 5), s1 in 0.0f64..1.0, extra in 0.0f64..1.0) {
            let t = [0.0, 0.1, 0.2, 0.3, 0.4];
            let a = gronwall_certify(&t, &e, &d, 2.0, s1).unwrap();
            let b = gronwall_certify(&t, &e, &d, 2.0, s1 + extra).unwrap();
            prop_assert!(!a.pass || b.pass);
        }
    }
}
