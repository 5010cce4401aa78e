use thiserror::Error;

use crate::io::SnapshotError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },
    #[error("vacuum breakdown at t = {time}: density {density:e} in cell {cell}")]
    VacuumBreakdown { time: f64, cell: usize, density: f64 },
    #[error("time step collapsed to {dt:e} at t = {time}")]
    CflCollapse { time: f64, dt: f64 },
    #[error("time {tau} outside span [{start}, {end}]")]
    OutOfRange { tau: f64, start: f64, end: f64 },
    #[error("Riemann data forms vacuum: velocity gap {gap} exceeds {limit}")]
    VacuumFormation { gap: f64, limit: f64 },
    #[error("characteristics cross before the requested time; smallest attempted epsilon {epsilon:e}")]
    CharacteristicCrossing { epsilon: f64 },
    #[error("mollification scale {epsilon} below resolution on axis {axis} (spacing {spacing})")]
    BelowResolution { epsilon: f64, axis: usize, spacing: f64 },
    #[error("window error: {0}")]
    Window(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("misaligned series: {0}")]
    Misaligned(String),
    #[error("defect measures violate the constraint algebra: {0}")]
    DefectAlgebra(String),
    #[error("observable undefined on atom {atom} of cell {cell}")]
    ObservableUndefined { cell: usize, atom: usize },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
