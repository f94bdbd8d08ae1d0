//! Intermittent jets: profiles, parameters, grid evaluation, reduced
//! quadrature identities and scaling bounds.

pub mod eval;
pub mod params;
pub mod profiles;
pub mod slab;

pub use eval::{eval_jet, Jet, JetFields, JetPoint};
pub use params::{max_disjoint_r_perp, JetParams};
pub use profiles::{ProfileChecks, Profiles};
pub use slab::{check_jet_bounds, check_jet_identities, JetBoundsReport, JetIdentityReport, SlabQuadrature};
