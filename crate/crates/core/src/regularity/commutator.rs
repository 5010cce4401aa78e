use serde::Serialize;

use super::besov::{besov_norm, BesovWindow};
use super::field::{lp_norm, Field};
use super::mollifier::Mollifier;
use super::rates::{check_dyadic, common_region, fit_log_log, SlopeFit};
use crate::error::{Error, Result};

/// A `C^2` scalar function with its first two derivatives.
pub trait ScalarMap: Sync {
    fn value(&self, v: f64) -> f64;
    fn d1(&self, v: f64) -> f64;
    fn d2(&self, v: f64) -> f64;
    /// Open interval on which the map is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// `v^k`; negative powers live on `(0, inf)`.
#[derive(Debug, Clone, Copy)]
pub struct Power(pub i32);

impl ScalarMap for Power {
    fn value(&self, v: f64) -> f64 {
        v.powi(self.0)
    }
    fn d1(&self, v: f64) -> f64 {
        self.0 as f64 * v.powi(self.0 - 1)
    }
    fn d2(&self, v: f64) -> f64 {
        (self.0 * (self.0 - 1)) as f64 * v.powi(self.0 - 2)
    }
    fn domain(&self) -> (f64, f64) {
        if self.0 < 0 {
            (0.0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
}

/// `a v + b`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
}

impl ScalarMap for Affine {
    fn value(&self, v: f64) -> f64 {
        self.a * v + self.b
    }
    fn d1(&self, _: f64) -> f64 {
        self.a
    }
    fn d2(&self, _: f64) -> f64 {
        0.0
    }
}

/// The isentropic pressure `a v^gamma` on `(0, inf)`.
#[derive(Debug, Clone, Copy)]
pub struct PressureMap(pub crate::fields::PressureLaw);

impl ScalarMap for PressureMap {
    fn value(&self, v: f64) -> f64 {
        self.0.p(v)
    }
    fn d1(&self, v: f64) -> f64 {
        self.0.p_prime(v)
    }
    fn d2(&self, v: f64) -> f64 {
        let g = self.0.gamma;
        self.0.a * g * (g - 1.0) * v.powf(g - 2.0)
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

/// `grad G([V]) - grad [G(V)]` and its two pieces, one field per axis.
#[derive(Debug, Clone)]
pub struct Commutator {
    pub full: Vec<Field>,
    /// `(G'([V]) - G'(V)) grad [V]`
    pub derivative_gap: Vec<Field>,
    /// `G'(V) grad [V] - grad [G(V)]`
    pub taylor_remainder: Vec<Field>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorNorms {
    pub full: f64,
    pub derivative_gap: f64,
    pub taylor_remainder: f64,
    /// Largest `|full - (gap + remainder)|`.
    pub identity_gap: f64,
}

pub fn commutator<G: ScalarMap + ?Sized>(g: &G, v: &Field, mollifier: &Mollifier) -> Result<Commutator> {
    let (lo, hi) = g.domain();
    let (vmin, vmax) = v.range();
    if !(vmin > lo && vmax < hi) {
        return Err(Error::Domain(format!("field range [{vmin}, {vmax}] leaves the domain ({lo}, {hi}) of G")));
    }
    let mv = mollifier.mollify(v)?;
    let gv = v.map(|x| g.value(x));
    let mut full = Vec::new();
    let mut gap = Vec::new();
    let mut rem = Vec::new();
    for axis in 0..v.dim() {
        let dmv = mollifier.derivative(v, axis)?;
        let dgv = mollifier.derivative(&gv, axis)?;
        let g1_m = mv.map(|x| g.d1(x));
        let g1_v = v.map(|x| g.d1(x));
        let f = g1_m.zip(&dmv, |a, b| a * b)?.zip(&dgv, |a, b| a - b)?;
        let a = g1_m.zip(&g1_v, |a, b| a - b)?.zip(&dmv, |a, b| a * b)?;
        let b = g1_v.zip(&dmv, |a, b| a * b)?.zip(&dgv, |a, b| a - b)?;
        full.push(f);
        gap.push(a);
        rem.push(b);
    }
    Ok(Commutator { full, derivative_gap: gap, taylor_remainder: rem })
}

impl Commutator {
    /// `L^{p/2}` norms on a set of flat indices.
    pub fn norms(&self, p: f64, idx: &[usize]) -> CommutatorNorms {
        let r = |fs: &[Field]| lp_norm(&fs.iter().collect::<Vec<_>>(), p / 2.0, idx);
        let mut identity_gap: f64 = 0.0;
        for axis in 0..self.full.len() {
            for &i in idx {
                let d = self.full[axis].data[i] - (self.derivative_gap[axis].data[i] + self.taylor_remainder[axis].data[i]);
                identity_gap = identity_gap.max(d.abs());
            }
        }
        CommutatorNorms {
            full: r(&self.full),
            derivative_gap: r(&self.derivative_gap),
            taylor_remainder: r(&self.taylor_remainder),
            identity_gap,
        }
    }

    pub fn valid_indices(&self) -> Vec<usize> {
        let region = common_region(&self.full);
        self.full[0].region_indices(&region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorRow {
    pub epsilon: f64,
    pub norms: CommutatorNorms,
    /// `full / (eps^{2 alpha - 1} (1 + B^2))`
    pub implied_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorRate {
    pub alpha: f64,
    pub p: f64,
    pub besov: f64,
    pub table: Vec<CommutatorRow>,
    pub slope: SlopeFit,
    /// `max / min` of the implied constants.
    pub constant_ratio: f64,
}

/// Fitted decay of the commutator norm over a dyadic scale list.
pub fn commutator_rate<G: ScalarMap + ?Sized>(g: &G, v: &Field, alpha: f64, p: f64, eps_list: &[f64]) -> Result<CommutatorRate> {
    check_dyadic(eps_list, 3)?;
    let comms = eps_list
        .iter()
        .map(|&e| commutator(g, v, &Mollifier::for_field(e, v)?))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<Field> = comms.iter().flat_map(|c| c.full.iter().cloned()).collect();
    let region = common_region(&all);
    let idx = v.region_indices(&region);
    if idx.is_empty() {
        return Err(Error::Window("no point is valid at every scale".into()));
    }
    let window = BesovWindow { alpha, p, eta_max: BesovWindow::default_eta_max(v) };
    let besov = besov_norm(&[v], &window, None)?.total;
    let mut table = Vec::new();
    for (c, &eps) in comms.iter().zip(eps_list) {
        let norms = c.norms(p, &idx);
        let implied_constant = norms.full / (eps.powf(2.0 * alpha - 1.0) * (1.0 + besov * besov));
        table.push(CommutatorRow { epsilon: eps, norms, implied_constant });
    }
    let slope = fit_log_log(eps_list, &table.iter().map(|r| r.norms.full).collect::<Vec<_>>())?;
    let (cmin, cmax) = table
        .iter()
        .map(|r| r.implied_constant)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c), hi.max(c)));
    let constant_ratio = if cmax == 0.0 { 1.0 } else { cmax / cmin };
    Ok(CommutatorRate { alpha, p, besov, table, slope, constant_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::rates::dyadic;
    use crate::regularity::weierstrass::{resolved_octaves, weierstrass_1d};

    #[test]
    fn affine_map_and_constant_field_give_zero() {
        let v = weierstrass_1d(512, 0.6, 6);
        let m = Mollifier::for_field(1.0 / 16.0, &v).unwrap();
        let c = commutator(&Affine { a: 2.0, b: -1.0 }, &v, &m).unwrap();
        let n = c.norms(8.0, &c.valid_indices());
        assert!(n.full < 1e-12 && n.derivative_gap == 0.0, "{n:?}");
        let k = v.map(|_| 0.7);
        let c = commutator(&Power(2), &k, &m).unwrap();
        assert_eq!(c.norms(8.0, &c.valid_indices()).full, 0.0);
    }

    #[test]
    fn pieces_sum_to_full() {
        let v = weierstrass_1d(1024, 0.6, 7);
        let m = Mollifier::for_field(1.0 / 32.0, &v).unwrap();
        let c = commutator(&Power(3), &v, &m).unwrap();
        assert!(c.norms(8.0, &c.valid_indices()).identity_gap <= 1e-12);
    }

    #[test]
    fn range_escape_is_a_domain_error() {
        let v = weierstrass_1d(256, 0.6, 4);
        let m = Mollifier::for_field(0.1, &v).unwrap();
        assert!(matches!(commutator(&Power(-1), &v, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn smooth_field_decays_fast() {
        let n = 2048;
        let h = 2.0 / n as f64;
        let data = (0..n).map(|i| (std::f64::consts::PI * (-1.0 + (i as f64 + 0.5) * h)).sin()).collect();
        let v = Field::new(vec![n], vec![h], vec![true], data).unwrap();
        let r = commutator_rate(&Power(2), &v, 0.6, 8.0, &dyadic(3, 8)).unwrap();
        assert!(r.slope.slope().unwrap() >= 1.0, "{:?}", r.slope);
    }

    #[test]
    fn cubic_on_shifted_weierstrass() {
        let n = 4096;
        let v = weierstrass_1d(n, 0.8, resolved_octaves(n)).map(|x| x + 2.0);
        // coarse scales saturate; the asymptotic range starts near 2^-5
        let r = commutator_rate(&Power(3), &v, 0.8, 8.0, &dyadic(5, 9)).unwrap();
        assert!(r.slope.slope().unwrap() >= 0.5, "{:?}", r.slope);
    }
}
