pub mod certificate;
pub mod functional;
pub mod gronwall;
pub mod lipschitz;
pub mod terms;

pub use certificate::{uniqueness_certify, CertificateReport, CertificateSeries, CertifyConfig, Check, ReferencePair, Verdict};
pub use functional::{rel_energy, rel_energy_density, rel_energy_dissipative, ReferenceFields, RelEnergy};
pub use gronwall::{gronwall_certify, rate_constant, GronwallCertificate};
pub use lipschitz::{estimate_d, min_eigenvalue, weak_lipschitz_check, OneSidedLipschitz, Region, VelocitySeries, WeakLipschitzCheck};
pub use terms::{dyadic_trend, r5_trend, rhs_direct, rhs_rearranged, rhs_terms_r5, BlockTrend, R5Blocks, R5Trend, ReferenceJet, RhsDirect, RhsRearranged};
