//! Spectral fields on the torus T³ and the linear operators, norms,
//! semigroups and mollifiers that act on them.

pub mod grid;
pub mod mollify;
pub mod norms;
pub mod ops;
pub mod snapshot;
pub mod spectral;
pub mod trajectory;

pub use grid::Grid3;
pub use mollify::{mollify_onesided, SpaceMollifier, TimeMollifier};
pub use norms::{norm, trajectory_norm, NormKind};
pub use ops::{
    curl, divergence, divergence_tensor, gradient, heat_semigroup, inv_divergence, laplacian,
    leray_project, spectral_filter, traceless_product_with, traceless_tensor_product, Filter,
    ProductRule,
};
pub use spectral::{SpectralField, SpectralScalarField, SpectralVectorField, SymmetricTensorField};
pub use trajectory::TimeTrajectory;
