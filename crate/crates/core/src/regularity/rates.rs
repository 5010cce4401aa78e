use serde::Serialize;

use super::field::{lp_norm, Field};
use super::mollifier::Mollifier;
use crate::error::{Error, Result};

/// Least-squares line through `(log eps, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeFit {
    Fitted { slope: f64, intercept: f64, stderr: f64, points: usize },
    /// Every value was zero: the quantity vanishes at all scales.
    Exact,
}

impl SlopeFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeFit::Fitted { slope, .. } => Some(*slope),
            SlopeFit::Exact => None,
        }
    }

    /// `slope -/+ 2 stderr`.
    pub fn band(&self) -> Option<(f64, f64)> {
        match self {
            SlopeFit::Fitted { slope, stderr, .. } => Some((slope - 2.0 * stderr, slope + 2.0 * stderr)),
            SlopeFit::Exact => None,
        }
    }

    /// Whether the fit is at least `bound` (exact counts as arbitrarily steep).
    pub fn at_least(&self, bound: f64) -> bool {
        self.slope().is_none_or(|s| s >= bound)
    }
}

/// Values that are not finite and positive are dropped. Fewer than three usable points is an error.
pub fn fit_log_log(eps: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if eps.len() != values.len() {
        return Err(Error::Misaligned(format!("{} scales, {} values", eps.len(), values.len())));
    }
    if !values.is_empty() && values.iter().all(|&v| v == 0.0) {
        return Ok(SlopeFit::Exact);
    }
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(values)
        .filter(|(&e, &v)| e > 0.0 && v > 0.0 && v.is_finite())
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} usable scales, need 3")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit::Fitted { slope, intercept, stderr, points: n })
}

/// Scales must halve (or double) from one entry to the next.
pub fn check_dyadic(eps: &[f64], min_len: usize) -> Result<()> {
    if eps.len() < min_len {
        return Err(Error::InsufficientData(format!("{} scales given, need {min_len}", eps.len())));
    }
    for w in eps.windows(2) {
        let r = w[0] / w[1];
        if !((r - 2.0).abs() < 1e-9 || (r - 0.5).abs() < 1e-9) {
            return Err(Error::InvalidParameter { name: "eps_list", constraint: format!("{} -> {} is not dyadic", w[0], w[1]) });
        }
    }
    Ok(())
}

/// Region valid for every listed kernel scale.
pub(crate) fn common_region(fields: &[Field]) -> Vec<(usize, usize)> {
    let d = fields[0].dim();
    (0..d)
        .map(|a| fields.iter().fold((0, usize::MAX), |acc, f| (acc.0.max(f.valid[a].0), acc.1.min(f.valid[a].1))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollificationRow {
    pub epsilon: f64,
    /// `||[v]_eps - v||_p`
    pub approximation: f64,
    /// `||grad_x [v]_eps||_p`
    pub gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollificationRates {
    pub p: f64,
    pub table: Vec<MollificationRow>,
    pub s4: SlopeFit,
    pub s5: SlopeFit,
}

/// Fitted slopes of the mollification error and of the mollified gradient.
///
/// `grad_x` runs over the periodic (spatial) axes.
pub fn rate_p4_p5(field: &Field, p: f64, eps_list: &[f64]) -> Result<MollificationRates> {
    check_dyadic(eps_list, 5)?;
    let spatial: Vec<usize> = (0..field.dim()).filter(|&a| field.periodic[a]).collect();
    let mut smooth = Vec::new();
    let mut grads = Vec::new();
    for &eps in eps_list {
        let m = Mollifier::for_field(eps, field)?;
        smooth.push(m.mollify(field)?);
        grads.push(spatial.iter().map(|&a| m.derivative(field, a)).collect::<Result<Vec<_>>>()?);
    }
    let region = common_region(&smooth);
    let idx = field.region_indices(&region);
    if idx.is_empty() {
        return Err(Error::Window("no point is valid at every scale".into()));
    }
    let mut table = Vec::new();
    for (k, &eps) in eps_list.iter().enumerate() {
        let diff = smooth[k].zip(field, |a, b| a - b)?;
        let g: Vec<&Field> = grads[k].iter().collect();
        table.push(MollificationRow {
            epsilon: eps,
            approximation: lp_norm(&[&diff], p, &idx),
            gradient: if g.is_empty() { 0.0 } else { lp_norm(&g, p, &idx) },
        });
    }
    let eps: Vec<f64> = table.iter().map(|r| r.epsilon).collect();
    let s4 = fit_log_log(&eps, &table.iter().map(|r| r.approximation).collect::<Vec<_>>())?;
    let s5 = fit_log_log(&eps, &table.iter().map(|r| r.gradient).collect::<Vec<_>>())?;
    Ok(MollificationRates { p, table, s4, s5 })
}

/// `2^{-k}` for `k` in `from..=to`.
pub fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::weierstrass::{resolved_octaves, weierstrass_1d};

    #[test]
    fn fit_recovers_power_law() {
        let eps = dyadic(2, 7);
        let v: Vec<f64> = eps.iter().map(|e| 3.0 * e.powf(0.7)).collect();
        let f = fit_log_log(&eps, &v).unwrap();
        assert!((f.slope().unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(fit_log_log(&eps, &[0.0; 6]).unwrap(), SlopeFit::Exact);
        assert!(fit_log_log(&eps[..2], &v[..2]).is_err());
    }

    #[test]
    fn dyadic_check() {
        assert!(check_dyadic(&dyadic(3, 7), 5).is_ok());
        assert!(check_dyadic(&dyadic(3, 6), 5).is_err());
        assert!(check_dyadic(&[0.1, 0.05, 0.02, 0.01, 0.005], 5).is_err());
    }

    #[test]
    fn smooth_field_rates() {
        let n = 2048;
        let h = 2.0 / n as f64;
        let data = (0..n).map(|i| (std::f64::consts::PI * (-1.0 + (i as f64 + 0.5) * h)).sin()).collect();
        let f = Field::new(vec![n], vec![h], vec![true], data).unwrap();
        let r = rate_p4_p5(&f, 2.0, &dyadic(3, 8)).unwrap();
        assert!(r.s4.slope().unwrap() >= 1.9, "{:?}", r.s4);
        assert!(r.s5.slope().unwrap() >= -0.05, "{:?}", r.s5);
    }

    #[test]
    fn constant_field_is_exact() {
        let f = Field::new(vec![256], vec![2.0 / 256.0], vec![true], vec![1.5; 256]).unwrap();
        let r = rate_p4_p5(&f, 2.0, &dyadic(2, 6)).unwrap();
        assert_eq!(r.s4, SlopeFit::Exact);
        assert_eq!(r.s5, SlopeFit::Exact);
    }

    #[test]
    fn weierstrass_rates_bracket_alpha() {
        let n = 4096;
        let f = weierstrass_1d(n, 0.6, resolved_octaves(n));
        let r = rate_p4_p5(&f, 8.0, &dyadic(3, 9)).unwrap();
        let s4 = r.s4.slope().unwrap();
        let s5 = r.s5.slope().unwrap();
        assert!((0.5..=0.75).contains(&s4), "{s4}");
        assert!((-0.5..=-0.25).contains(&s5), "{s5}");
    }
}
