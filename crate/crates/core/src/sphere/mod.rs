//! Spherical geometry, Legendre machinery and isotropic random-field
//! synthesis.

mod grid;
mod legendre;
mod spectrum;
mod synthesis;

pub use grid::{angular_distance, ScalarField, SpherePoint, SphericalGrid};
pub use legendre::{assoc_legendre, legendre_p, legendre_table, normalized_assoc_legendre_table};
pub use spectrum::{
    isotropic_covariance, point_covariance, power_spectrum, real_spherical_harmonic, spherical_harmonic, SpectrumParams,
};
pub use synthesis::{sample_innovation, synthesize_field, HarmonicCoeffs, Synthesizer};

pub(crate) use synthesis::fill_innovation;
