//! Numerical oracles shared by the integration suites.
//!
//! Everything here deliberately avoids the closed forms it is used to check:
//! prior normalizers are evaluated by adaptive quadrature of the defining
//! integral, KL divergences by direct summation/quadrature of
//! ∫ f₁ log(f₁/f₂), and ML terms through the natural-parameter route.

// each test binary uses a different subset
#![allow(dead_code)]

use oddarm::expfam::{
    ExpectationParam, FamilyDescriptor, FamilyKind, HyperParams, NaturalParam, ParamVec,
};
use oddarm::glr::RunState;
use oddarm::quad;
use rand::Rng;

pub fn all_families() -> Vec<FamilyDescriptor> {
    vec![
        FamilyDescriptor::poisson(),
        FamilyDescriptor::bernoulli(),
        FamilyDescriptor::gaussian_known_var(1.0).unwrap(),
        FamilyDescriptor::gaussian_zero_mean_unknown_var(),
        FamilyDescriptor::vector_gaussian(),
    ]
}

pub fn scalar_families() -> Vec<FamilyDescriptor> {
    all_families()
        .into_iter()
        .filter(|f| f.dim() == 1)
        .collect()
}

/// Random in-domain natural parameter away from the domain edges.
pub fn random_eta<R: Rng>(f: &FamilyDescriptor, rng: &mut R) -> NaturalParam {
    match f.kind() {
        FamilyKind::Poisson => NaturalParam::scalar(rng.random_range(-2.0..2.0)),
        FamilyKind::Bernoulli => NaturalParam::scalar(rng.random_range(-3.0..3.0)),
        FamilyKind::GaussianKnownVar { .. } => NaturalParam::scalar(rng.random_range(-6.0..6.0)),
        FamilyKind::GaussianZeroMeanUnknownVar => {
            NaturalParam::scalar(-rng.random_range(0.05..8.0))
        }
        FamilyKind::VectorGaussian => {
            NaturalParam::pair(rng.random_range(-3.0..3.0), -rng.random_range(0.1..4.0))
        }
    }
}

// ---------------------------------------------------------------------------
// Prior-normalizer quadrature oracle
// ---------------------------------------------------------------------------

/// log ∫ exp(τᵀη − n₀ A(η)) dη by quadrature of the defining integral.
pub fn log_prior_normalizer_quad(f: &FamilyDescriptor, h: &HyperParams) -> f64 {
    let tau = h.tau;
    let n0 = h.n0;
    match f.kind() {
        FamilyKind::Poisson
        | FamilyKind::Bernoulli
        | FamilyKind::GaussianKnownVar { .. }
        | FamilyKind::GaussianZeroMeanUnknownVar => {
            let g = |eta: f64| {
                let a = f
                    .log_partition(&NaturalParam::scalar(eta))
                    .unwrap_or(f64::INFINITY);
                tau.get(0) * eta - n0 * a
            };
            let mode_kappa = f.clamp_to_interior(ExpectationParam::scalar(tau.get(0) / n0));
            let mode = f.eta_of_kappa(&mode_kappa).unwrap().get(0);
            let upper = match f.kind() {
                FamilyKind::GaussianZeroMeanUnknownVar => Some(0.0),
                _ => None,
            };
            quad::log_integrate_exp(g, mode, None, upper)
        }
        FamilyKind::VectorGaussian => {
            // nested: Gaussian inner integral over eta1, then outer over eta2 < 0
            let inner = |eta2: f64| {
                let g1 = |eta1: f64| tau.get(0) * eta1 + n0 * eta1 * eta1 / (4.0 * eta2);
                let mode1 = -2.0 * tau.get(0) * eta2 / n0;
                quad::log_integrate_exp(g1, mode1, None, None)
            };
            let g2 = |eta2: f64| tau.get(1) * eta2 + 0.5 * n0 * (-2.0 * eta2).ln() + inner(eta2);
            let c = tau.get(1) - tau.get(0) * tau.get(0) / n0;
            let mode2 = -(n0 + 1.0) / (2.0 * c);
            quad::log_integrate_exp(g2, mode2, None, Some(0.0))
        }
    }
}

// ---------------------------------------------------------------------------
// KL oracle: direct summation / quadrature of the defining integral
// ---------------------------------------------------------------------------

/// Log density (or log pmf) of the observation under η.
pub fn log_density(f: &FamilyDescriptor, eta: &NaturalParam, x: f64) -> f64 {
    match f.kind() {
        FamilyKind::Poisson => {
            let rate = eta.get(0).exp();
            x * rate.ln() - rate - libm::lgamma(x + 1.0)
        }
        FamilyKind::Bernoulli => {
            let p = 1.0 / (1.0 + (-eta.get(0)).exp());
            if x > 0.5 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        }
        FamilyKind::GaussianKnownVar { sigma } => {
            let mu = eta.get(0) * sigma;
            let z = (x - mu) / sigma;
            -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
        }
        FamilyKind::GaussianZeroMeanUnknownVar => {
            let var = -0.5 / eta.get(0);
            -0.5 * x * x / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
        }
        FamilyKind::VectorGaussian => {
            let var = -0.5 / eta.get(1);
            let mu = eta.get(0) * var;
            let z = (x - mu) / var.sqrt();
            -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
        }
    }
}

/// ∫ f₁ log(f₁/f₂) evaluated without the closed forms.
pub fn kl_oracle(f: &FamilyDescriptor, eta1: &NaturalParam, eta2: &NaturalParam) -> f64 {
    match f.kind() {
        FamilyKind::Poisson => {
            let rate = eta1.get(0).exp();
            let cap = (rate + 40.0 * rate.sqrt() + 60.0).ceil() as u64;
            (0..=cap)
                .map(|k| {
                    let x = k as f64;
                    let l1 = log_density(f, eta1, x);
                    let l2 = log_density(f, eta2, x);
                    l1.exp() * (l1 - l2)
                })
                .sum()
        }
        FamilyKind::Bernoulli => [0.0, 1.0]
            .iter()
            .map(|&x| {
                let l1 = log_density(f, eta1, x);
                let l2 = log_density(f, eta2, x);
                l1.exp() * (l1 - l2)
            })
            .sum(),
        _ => {
            // continuous scalar observation: integrate on a 12-sigma window
            let (mu, sd) = match f.kind() {
                FamilyKind::GaussianKnownVar { sigma } => (eta1.get(0) * sigma, sigma),
                FamilyKind::GaussianZeroMeanUnknownVar => (0.0, (-0.5 / eta1.get(0)).sqrt()),
                FamilyKind::VectorGaussian => {
                    let var = -0.5 / eta1.get(1);
                    (eta1.get(0) * var, var.sqrt())
                }
                _ => unreachable!(),
            };
            quad::integrate(
                |x| {
                    let l1 = log_density(f, eta1, x);
                    let l2 = log_density(f, eta2, x);
                    l1.exp() * (l1 - l2)
                },
                mu - 12.0 * sd,
                mu + 12.0 * sd,
                1e-11,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// GLR numerator oracle
// ---------------------------------------------------------------------------

/// Modified GLR Z_ij computed through the quadrature normalizers and the
/// natural-parameter ML route; fully independent of the closed-form path.
pub fn glr_statistic_oracle(
    state: &RunState,
    i: usize,
    j: usize,
    f: &FamilyDescriptor,
    hyper: &HyperParams,
) -> f64 {
    let n = state.step_count();
    let posterior_odd = HyperParams::new(
        state.stat_sum(i).add(&hyper.tau),
        state.pulls(i) as f64 + hyper.n0,
    );
    let posterior_rest = HyperParams::new(
        state.stat_total().sub(state.stat_sum(i)).add(&hyper.tau),
        (n - state.pulls(i)) as f64 + hyper.n0,
    );
    let numerator = log_prior_normalizer_quad(f, &posterior_odd)
        + log_prior_normalizer_quad(f, &posterior_rest)
        - 2.0 * log_prior_normalizer_quad(f, hyper);

    let (k1, k2) = state.ml_estimates(j, f).unwrap();
    let n_j = state.pulls(j) as f64;
    let rest = (n - state.pulls(j)) as f64;
    let e1 = f.eta_of_kappa(&k1).unwrap();
    let e2 = f.eta_of_kappa(&k2).unwrap();
    let denominator = e1.0.dot(&k1.0.scale(n_j)) - n_j * f.log_partition(&e1).unwrap()
        + e2.0.dot(&k2.0.scale(rest))
        - rest * f.log_partition(&e2).unwrap();
    numerator - denominator
}

/// A short random trace over `k` arms with every arm visited enough for the
/// GLR to be defined, generated from two random in-domain parameters.
pub fn random_trace<R: Rng>(f: &FamilyDescriptor, k: usize, steps: usize, rng: &mut R) -> RunState {
    let eta_odd = random_eta(f, rng);
    let eta_common = random_eta(f, rng);
    let mut state = RunState::new(f, k);
    for t in 0..steps {
        let arm = if t < k * f.min_samples() as usize {
            t % k
        } else {
            rng.random_range(0..k)
        };
        let eta = if arm == 0 { &eta_odd } else { &eta_common };
        let x = f.sample(eta, rng).unwrap();
        state.update(arm, x, f).unwrap();
    }
    state
}

/// Convenience constructor for hyper-parameter vectors.
pub fn hyper(tau: &[f64], n0: f64) -> HyperParams {
    HyperParams::new(ParamVec::from_slice(tau), n0)
}
