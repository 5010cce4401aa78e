//! Numerical laboratory for relative-energy and weak-strong uniqueness
//! arguments for the isentropic Euler system on a flat torus.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod fv;
pub mod io;
pub mod mvs;
pub mod regularity;
pub mod relenergy;
pub mod riemann;

pub use error::{Error, Result};
pub use fields::{energy_density, total_energy, uniform_times, FluidState, PressureLaw, TorusGrid, Trajectory};
