//! Fixed little-endian binary snapshots.
//!
//! Layout:
//! `"ERL1"`, u32 version, u32 N, N x u64 cells, N x f64 half-periods,
//! f64 time, f64 a, f64 gamma, then per cell `rho, m_1..m_N` as f64.
//! An optional atom section follows: per cell a u32 atom count, then
//! `weight, rho, m_1..m_N` per atom.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::fields::{FluidState, PressureLaw, TorusGrid};
use crate::mvs::{Atom, YoungMeasure};

pub const MAGIC: &[u8; 4] = b"ERL1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("truncated payload: needed {needed} bytes at offset {offset}, {available} available")]
    TruncatedPayload { offset: usize, needed: usize, available: usize },
    #[error("NaN density in cell {0}")]
    NanDensity(usize),
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
}

/// A state together with the geometry and law needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: TorusGrid,
    pub law: PressureLaw,
    pub state: FluidState,
    /// Per-cell Young measures, if stored.
    pub measure: Option<YoungMeasure>,
}

impl Snapshot {
    pub fn new(grid: TorusGrid, law: PressureLaw, state: FluidState) -> Self {
        Self { grid, law, state, measure: None }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = self.grid.dim();
        let n = self.grid.len();
        let mut out = Vec::with_capacity(32 + 16 * dim + 8 * n * (dim + 1));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(dim as u32).to_le_bytes());
        for &c in self.grid.cells() {
            out.extend_from_slice(&(c as u64).to_le_bytes());
        }
        for &l in self.grid.half_periods() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for v in [self.state.time, self.law.a, self.law.gamma] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in 0..n {
            out.extend_from_slice(&self.state.rho[c].to_le_bytes());
            for d in 0..dim {
                out.extend_from_slice(&self.state.momentum[d][c].to_le_bytes());
            }
        }
        if let Some(measure) = &self.measure {
            for atoms in &measure.cells {
                out.extend_from_slice(&(atoms.len() as u32).to_le_bytes());
                for a in atoms {
                    out.extend_from_slice(&a.weight.to_le_bytes());
                    out.extend_from_slice(&a.rho.to_le_bytes());
                    for d in 0..dim {
                        out.extend_from_slice(&a.momentum[d].to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader { bytes, offset: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if &magic != MAGIC {
            return Err(SnapshotError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedVersion { found: version, expected: FORMAT_VERSION });
        }
        let dim = r.u32()? as usize;
        if !(1..=3).contains(&dim) {
            return Err(SnapshotError::InvalidHeader(format!("dimension {dim}")));
        }
        let cells = (0..dim).map(|_| r.u64().map(|c| c as usize)).collect::<Result<Vec<_>, _>>()?;
        let half = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let grid = TorusGrid::new(cells, half).map_err(|e| SnapshotError::InvalidHeader(e.to_string()))?;
        let time = r.f64()?;
        let law = PressureLaw::new(r.f64()?, r.f64()?).map_err(|e| SnapshotError::InvalidHeader(e.to_string()))?;
        let n = grid.len();
        let needed = n.checked_mul(8 * (dim + 1)).ok_or_else(|| SnapshotError::InvalidHeader("cell count overflow".into()))?;
        if r.remaining() < needed {
            return Err(SnapshotError::TruncatedPayload { offset: r.offset, needed, available: r.remaining() });
        }
        let mut rho = vec![0.0; n];
        let mut momentum = vec![vec![0.0; n]; dim];
        for c in 0..n {
            rho[c] = r.f64()?;
            if rho[c].is_nan() {
                return Err(SnapshotError::NanDensity(c));
            }
            for m in momentum.iter_mut() {
                m[c] = r.f64()?;
            }
        }
        let state = FluidState { time, rho, momentum };
        let measure = if r.remaining() > 0 {
            let mut cells = Vec::with_capacity(n);
            for c in 0..n {
                let k = r.u32()? as usize;
                let mut atoms = Vec::with_capacity(k);
                for _ in 0..k {
                    let weight = r.f64()?;
                    let rho = r.f64()?;
                    if rho.is_nan() {
                        return Err(SnapshotError::NanDensity(c));
                    }
                    let mut m = [0.0; 3];
                    for v in m.iter_mut().take(dim) {
                        *v = r.f64()?;
                    }
                    atoms.push(Atom { weight, rho, momentum: m });
                }
                cells.push(atoms);
            }
            Some(YoungMeasure { dim, cells })
        } else {
            None
        };
        if r.remaining() > 0 {
            return Err(SnapshotError::TrailingBytes(r.remaining()));
        }
        Ok(Self { grid, law, state, measure })
    }

    pub fn write(&self, path: &Path) -> crate::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> crate::Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.offset
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8], SnapshotError> {
        if self.remaining() < k {
            return Err(SnapshotError::TruncatedPayload { offset: self.offset, needed: k, available: self.remaining() });
        }
        let s = &self.bytes[self.offset..self.offset + k];
        self.offset += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
