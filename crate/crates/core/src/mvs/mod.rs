//! Measure-valued and dissipative solutions.

pub mod certificate;
pub mod defects;
pub mod measure;
pub mod residuals;
pub mod solution;
pub mod terms;

pub use certificate::dt1_certify;
pub use defects::{DefectMeasures, DirectionSet};
pub use measure::{observables, Atom, YoungMeasure};
pub use residuals::mvs_residuals;
pub use solution::{dissipative_energy, DissipativeEnergy, DissipativeSolution, MvsSnapshot};
pub use terms::{dissipative_rel_energy_terms, D6Blocks};
