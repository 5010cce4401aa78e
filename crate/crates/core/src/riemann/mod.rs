//! Exact Riemann solutions, classical characteristic solutions and the
//! embedding of Riemann far-field data into a torus.

pub mod classical;
pub mod exact;
pub mod extension;
pub mod torus;

pub use classical::{solve_characteristics, Boundary, Breakdown, CharacteristicOptions, CharacteristicSolution, InvariantProfile};
pub use exact::{riemann_invariants, solve_riemann, state_from_invariants, RiemannData, Wave, WaveKind, WaveStructure};
pub use extension::{extend_to_torus, smooth_riemann_profile, smootherstep, Extension, ExtensionOptions, ExtensionSpec, PeriodicExtension};
pub use torus::{TorusRiemann, TorusRiemannSpec};
