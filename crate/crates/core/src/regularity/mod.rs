//! Mollification, Besov norms, mollification rates and commutators.

pub mod besov;
pub mod commutator;
pub mod field;
pub mod mollifier;
pub mod rates;
pub mod weierstrass;

pub use besov::{admitted_shifts, besov_norm, BesovNorm, BesovWindow};
pub use commutator::{commutator, commutator_rate, Affine, Commutator, CommutatorNorms, CommutatorRate, Power, PressureMap, ScalarMap};
pub use field::{lp_norm, Field};
pub use mollifier::Mollifier;
pub use rates::{dyadic, fit_log_log, rate_p4_p5, MollificationRates, SlopeFit};
pub use weierstrass::{resolved_octaves, weierstrass, weierstrass_1d, weierstrass_field};
