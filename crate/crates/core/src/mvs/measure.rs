use crate::error::{Error, Result};
use crate::fields::{FluidState, PressureLaw};

/// Weighted point mass at `(rho, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub rho: f64,
    pub momentum: [f64; 3],
}

/// Per-cell finite atomic probability measures over `(rho, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungMeasure {
    pub dim: usize,
    pub cells: Vec<Vec<Atom>>,
}

/// Tolerance on `sum of weights = 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

impl YoungMeasure {
    pub fn new(dim: usize, cells: Vec<Vec<Atom>>) -> Result<Self> {
        let m = Self { dim, cells };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Domain(format!("measure dimension {}", self.dim)));
        }
        for (c, atoms) in self.cells.iter().enumerate() {
            if atoms.is_empty() {
                return Err(Error::Domain(format!("cell {c} has no atoms")));
            }
            let mut total = 0.0;
            for (k, a) in atoms.iter().enumerate() {
                if !(a.weight > 0.0) {
                    return Err(Error::Domain(format!("atom {k} of cell {c} has weight {}", a.weight)));
                }
                if !(a.rho >= 0.0) {
                    return Err(Error::Domain(format!("atom {k} of cell {c} has density {}", a.rho)));
                }
                if a.rho == 0.0 && a.momentum.iter().any(|&m| m != 0.0) {
                    return Err(Error::Domain(format!("atom {k} of cell {c} carries momentum in vacuum")));
                }
                total += a.weight;
            }
            if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(Error::Domain(format!("weights of cell {c} sum to {total}")));
            }
        }
        Ok(())
    }

    /// Dirac measure at the state in every cell.
    pub fn dirac(state: &FluidState) -> Self {
        let dim = state.dim();
        let cells = (0..state.len())
            .map(|c| vec![Atom { weight: 1.0, rho: state.rho[c], momentum: state.momentum_at(c) }])
            .collect();
        Self { dim, cells }
    }

    /// `lambda(x) delta_{s1(x)} + (1 - lambda(x)) delta_{s2(x)}`; `lambda` in (0, 1].
    pub fn mixture(s1: &FluidState, s2: &FluidState, lambda: &[f64]) -> Result<Self> {
        if s1.len() != s2.len() || s1.len() != lambda.len() || s1.dim() != s2.dim() {
            return Err(Error::Misaligned("mixture components differ in shape".into()));
        }
        let mut cells = Vec::with_capacity(s1.len());
        for c in 0..s1.len() {
            let l = lambda[c];
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::InvalidParameter { name: "lambda", constraint: format!("{l} not in (0, 1]") });
            }
            let mut atoms = vec![Atom { weight: l, rho: s1.rho[c], momentum: s1.momentum_at(c) }];
            if l < 1.0 {
                atoms.push(Atom { weight: 1.0 - l, rho: s2.rho[c], momentum: s2.momentum_at(c) });
            }
            cells.push(atoms);
        }
        Self::new(s1.dim(), cells)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Barycentric density and momentum.
    pub fn barycenter(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.cells.len();
        let mut rho = vec![0.0; n];
        let mut m = vec![vec![0.0; n]; self.dim];
        for (c, atoms) in self.cells.iter().enumerate() {
            if let [a] = atoms.as_slice() {
                rho[c] = a.rho;
                for d in 0..self.dim {
                    m[d][c] = a.momentum[d];
                }
                continue;
            }
            for a in atoms {
                rho[c] += a.weight * a.rho;
                for d in 0..self.dim {
                    m[d][c] += a.weight * a.momentum[d];
                }
            }
        }
        (rho, m)
    }

    pub fn barycenter_state(&self, time: f64) -> FluidState {
        let (rho, momentum) = self.barycenter();
        FluidState { time, rho, momentum }
    }

    /// `<V; g>` per cell. `g` returns `None` where it is undefined.
    pub fn moment<G>(&self, g: G) -> Result<Vec<f64>>
    where
        G: Fn(f64, &[f64]) -> Option<f64>,
    {
        let mut out = Vec::with_capacity(self.cells.len());
        for (c, atoms) in self.cells.iter().enumerate() {
            let mut acc = 0.0;
            for (k, a) in atoms.iter().enumerate() {
                let v = g(a.rho, &a.momentum[..self.dim]).ok_or(Error::ObservableUndefined { cell: c, atom: k })?;
                acc += if atoms.len() == 1 { v } else { a.weight * v };
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Observables with their vacuum limits.
pub mod observables {
    use super::PressureLaw;

    pub fn density(rho: f64, _m: &[f64]) -> Option<f64> {
        Some(rho)
    }

    /// `1/2 |m|^2 / rho + P(rho)`; undefined on vacuum atoms with momentum.
    pub fn energy(law: &PressureLaw) -> impl Fn(f64, &[f64]) -> Option<f64> + '_ {
        move |rho, m| {
            let m2: f64 = m.iter().map(|v| v * v).sum();
            if rho > 0.0 {
                Some(0.5 * m2 / rho + law.potential(rho))
            } else if m2 == 0.0 {
                Some(0.0)
            } else {
                None
            }
        }
    }

    pub fn pressure(law: &PressureLaw) -> impl Fn(f64, &[f64]) -> Option<f64> + '_ {
        move |rho, _| Some(law.p(rho))
    }

    /// `m_i m_j / rho`.
    pub fn convection(i: usize, j: usize) -> impl Fn(f64, &[f64]) -> Option<f64> {
        move |rho, m| {
            if rho > 0.0 {
                Some(m[i] * m[j] / rho)
            } else if m.iter().all(|&v| v == 0.0) {
                Some(0.0)
            } else {
                None
            }
        }
    }
}
