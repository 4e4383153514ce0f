//! Shared helpers for the unit tests.

use rand::Rng;

use crate::expfam::{FamilyDescriptor, FamilyKind, NaturalParam};

pub(crate) fn all_families() -> Vec<FamilyDescriptor> {
    vec![
        FamilyDescriptor::poisson(),
        FamilyDescriptor::bernoulli(),
        FamilyDescriptor::gaussian_known_var(1.0).unwrap(),
        FamilyDescriptor::gaussian_zero_mean_unknown_var(),
        FamilyDescriptor::vector_gaussian(),
    ]
}

/// A random in-domain natural parameter, kept away from domain edges so that
/// tight identity tolerances stay meaningful.
pub(crate) fn random_eta<R: Rng>(f: &FamilyDescriptor, rng: &mut R) -> NaturalParam {
    match f.kind() {
        FamilyKind::Poisson => NaturalParam::scalar(rng.random_range(-2.5..2.5)),
        FamilyKind::Bernoulli => NaturalParam::scalar(rng.random_range(-4.0..4.0)),
        FamilyKind::GaussianKnownVar { .. } => NaturalParam::scalar(rng.random_range(-8.0..8.0)),
        FamilyKind::GaussianZeroMeanUnknownVar => {
            NaturalParam::scalar(-rng.random_range(0.05..10.0))
        }
        FamilyKind::VectorGaussian => {
            NaturalParam::pair(rng.random_range(-4.0..4.0), -rng.random_range(0.1..5.0))
        }
    }
}
