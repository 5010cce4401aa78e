//! Finite-volume approximation of the isentropic Euler system on the torus,
//! plus the weak-form and energy diagnostics applied to its output.

pub mod basis;
pub mod energy;
pub mod scheme;
pub mod weak;

pub use basis::{Part, TemporalBump, TestFunction, TestFunctionBasis};
pub use energy::{energy_monitor, EnergyMonitor};
pub use scheme::{solve, Flux, SchemeConfig, DENSITY_FLOOR};
pub use weak::{max_abs_residual, weak_defects, weak_residual, ResidualPair, WeakFields};
