//! Odd-arm identification in a K-armed bandit with exponential-family
//! observations.
//!
//! One arm (the odd one) draws its samples from a different member of a
//! vector exponential family than the remaining K-1 arms, and neither
//! parameter is known up front. The library provides the pieces needed to
//! locate that arm sequentially under a false-detection constraint and a
//! per-switch sampling cost:
//!
//! - [`expfam`] — log-partition/dual pairs, duality maps, KL divergences,
//!   samplers, and conjugate-prior normalizers for five concrete families.
//! - [`complexity`] — the problem complexity `D*` and the optimal sampling
//!   weights `λ*` obtained by bisecting the concave objective's derivative.
//! - [`glr`] — run statistics and the modified GLR matrix `Z_ij` built from
//!   closed-form prior normalizers and maximum-likelihood plug-ins.
//! - [`policy`] — the sluggish modified-GLRT decision rule with its
//!   analysis variants.
//! - [`sim`] — seeded episode driver, switching-cost accounting, and
//!   Monte-Carlo sweeps.
//! - [`assumption`] — numerical verification that every arm is sampled at a
//!   nontrivial rate, via a Hessian-integral identity and grid scans.
//! - [`quad`] — the adaptive quadrature primitives backing the scans and
//!   the test oracles.
//!
//! ```
//! use oddarm::complexity::{solve_lambda_star, ArmConfiguration};
//! use oddarm::expfam::{ExpectationParam, FamilyDescriptor};
//! use oddarm::policy::PolicyConfig;
//! use oddarm::sim::{run_episode, SwitchCostMatrix};
//!
//! // eight Bernoulli arms; arm 0 pays off at 0.1, the rest at 0.8
//! let family = FamilyDescriptor::bernoulli();
//! let psi = ArmConfiguration::new(
//!     0,
//!     family.eta_of_kappa(&ExpectationParam::scalar(0.1))?,
//!     family.eta_of_kappa(&ExpectationParam::scalar(0.8))?,
//!     8,
//! )?;
//!
//! let complexity = solve_lambda_star(&family, &psi)?;
//! assert!((complexity.d_star - 0.2556).abs() < 1e-3);
//!
//! // one seeded episode of the decision rule at log L = 25, gamma = 1/2
//! let cfg = PolicyConfig::new(25.0, 0.5, family.default_hyper())?;
//! let costs = SwitchCostMatrix::uniform(8, 1.0)?;
//! let outcome = run_episode(&psi, &family, &cfg, &costs, 7)?;
//! assert_eq!(outcome.decision, Some(0));
//! assert_eq!(outcome.total_cost, outcome.stopping_time as f64 + outcome.switch_cost);
//! # Ok::<(), oddarm::Error>(())
//! ```

use thiserror::Error;

pub mod assumption;
pub mod complexity;
pub mod expfam;
pub mod glr;
pub mod policy;
pub mod quad;
pub mod sim;

#[cfg(test)]
pub(crate) mod testutil;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the family's open natural/expectation domain.
    #[error("invalid parameter for {family}: {reason}")]
    InvalidParameter {
        family: &'static str,
        reason: String,
    },

    /// Hyper-parameters outside the proper-prior region.
    #[error("improper hyper-parameters for {family}: {reason}")]
    ImproperHyper {
        family: &'static str,
        reason: String,
    },

    /// An observation outside the family's support.
    #[error("observation {value} not in the support of {family}")]
    UnsupportedObservation { family: &'static str, value: f64 },

    /// Arm index out of range.
    #[error("arm index {arm} out of range for {num_arms} arms")]
    ArmOutOfRange { arm: usize, num_arms: usize },

    /// A hypothesis does not yet have enough samples for its ML estimates.
    #[error("hypothesis {hypothesis} not ready: {have} of {need} required samples")]
    NotReady {
        hypothesis: usize,
        have: u64,
        need: u64,
    },

    /// Odd and non-odd parameters coincide; the complexity is degenerate.
    #[error("degenerate configuration: odd and non-odd parameters coincide")]
    DegenerateConfiguration,

    /// Structurally invalid configuration (K < 3, empty grids, bad ranges).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A scan grid point leaves the family domain.
    #[error("invalid scan grid: {0}")]
    InvalidGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
