//! Problem complexity D* and the optimal sampling weights λ*.
//!
//! For a configuration (odd arm i with parameter η₁, the rest at η₂), the
//! complexity is
//!
//! ```text
//! D* = max_{λ(i) ∈ [0,1]}  Φ(λ),
//! Φ(λ) = λ D(η₁‖η̃) + (1−λ) r D(η₂‖η̃),      r = (K−2)/(K−1),
//! ```
//!
//! where η̃ is the dual of the mixture
//! `κ̃ = (λκ₁ + (1−λ) r κ₂) / (λ + (1−λ) r)`. Φ is concave with
//! Φ(0) = Φ(1) = 0 and its derivative `Φ'(λ) = D(η₁‖η̃) − r D(η₂‖η̃)` is
//! strictly decreasing, so the maximizer is obtained by bisecting Φ' to a
//! sign change. The remaining mass is spread uniformly over the other arms.

use crate::expfam::{ExpectationParam, FamilyDescriptor, NaturalParam};
use crate::{Error, Result};

/// Bisection exits when |Φ'| drops below this...
const DERIV_TOL: f64 = 1e-10;
/// ...or when the bracketing interval is narrower than this.
const WIDTH_TOL: f64 = 1e-12;
/// Offset used when evaluating Φ' next to the λ ∈ {0, 1} endpoints.
const ENDPOINT_OFFSET: f64 = 1e-12;

/// Ground truth of an episode: which arm is odd and with what parameters.
///
/// Arm indices are 0-based; `odd_index` must lie in `0..num_arms` and
/// `num_arms >= 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmConfiguration {
    pub odd_index: usize,
    pub eta_odd: NaturalParam,
    pub eta_common: NaturalParam,
    pub num_arms: usize,
}

impl ArmConfiguration {
    pub fn new(
        odd_index: usize,
        eta_odd: NaturalParam,
        eta_common: NaturalParam,
        num_arms: usize,
    ) -> Result<Self> {
        if num_arms < 3 {
            return Err(Error::InvalidConfig(format!(
                "need at least 3 arms, got {num_arms}"
            )));
        }
        if odd_index >= num_arms {
            return Err(Error::ArmOutOfRange {
                arm: odd_index,
                num_arms,
            });
        }
        if eta_odd == eta_common {
            return Err(Error::DegenerateConfiguration);
        }
        Ok(Self {
            odd_index,
            eta_odd,
            eta_common,
            num_arms,
        })
    }

    /// Mass ratio r = (K−2)/(K−1) appearing in the reduced objective.
    pub fn mass_ratio(&self) -> f64 {
        (self.num_arms as f64 - 2.0) / (self.num_arms as f64 - 1.0)
    }

    /// Natural parameter of a given arm under this configuration.
    pub fn arm_eta(&self, arm: usize) -> NaturalParam {
        if arm == self.odd_index {
            self.eta_odd
        } else {
            self.eta_common
        }
    }
}

/// Output of the complexity solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityResult {
    /// The problem complexity D*.
    pub d_star: f64,
    /// Optimal sampling distribution over all K arms.
    pub lambda_star: Vec<f64>,
    /// Odd-arm mass λ*(i).
    pub lambda_odd: f64,
    /// Reparameterized mass λ̂* so that κ̃ = λ̂κ₁ + (1−λ̂)κ₂.
    pub lambda_hat: f64,
    /// Worst-case alternative in expectation coordinates.
    pub kappa_tilde: ExpectationParam,
    /// Worst-case alternative in natural coordinates.
    pub eta_tilde: NaturalParam,
}

/// The mixture κ̃ at odd-arm mass `lambda_i`:
/// `κ̃ = (λκ₁ + (1−λ) r κ₂) / (λ + (1−λ) r)` with r = (K−2)/(K−1).
pub fn kappa_tilde(
    lambda_i: f64,
    kappa1: &ExpectationParam,
    kappa2: &ExpectationParam,
    num_arms: usize,
) -> ExpectationParam {
    let r = (num_arms as f64 - 2.0) / (num_arms as f64 - 1.0);
    let lh = lambda_hat(lambda_i, num_arms);
    debug_assert!((lh - lambda_i / (lambda_i + (1.0 - lambda_i) * r)).abs() < 1e-12);
    ExpectationParam(kappa1.0.scale(lh).add(&kappa2.0.scale(1.0 - lh)))
}

/// λ̂ = λ / (λ + (1−λ)(K−2)/(K−1)), the weight for which κ̃ is the plain
/// convex combination λ̂κ₁ + (1−λ̂)κ₂.
pub fn lambda_hat(lambda_i: f64, num_arms: usize) -> f64 {
    let r = (num_arms as f64 - 2.0) / (num_arms as f64 - 1.0);
    lambda_i / (lambda_i + (1.0 - lambda_i) * r)
}

struct Objective<'a> {
    family: &'a FamilyDescriptor,
    kappa1: ExpectationParam,
    kappa2: ExpectationParam,
    num_arms: usize,
    ratio: f64,
}

impl<'a> Objective<'a> {
    fn new(family: &'a FamilyDescriptor, config: &ArmConfiguration) -> Result<Self> {
        let kappa1 = family.kappa_of_eta(&config.eta_odd)?;
        let kappa2 = family.kappa_of_eta(&config.eta_common)?;
        Ok(Self {
            family,
            kappa1,
            kappa2,
            num_arms: config.num_arms,
            ratio: config.mass_ratio(),
        })
    }

    /// (D(η₁‖η̃), D(η₂‖η̃)) at odd-arm mass λ.
    fn kl_pair(&self, lambda_i: f64) -> Result<(f64, f64)> {
        let kt = kappa_tilde(lambda_i, &self.kappa1, &self.kappa2, self.num_arms);
        let d1 = self.family.kl_expectation(&self.kappa1, &kt)?;
        let d2 = self.family.kl_expectation(&self.kappa2, &kt)?;
        Ok((d1, d2))
    }

    fn phi(&self, lambda_i: f64) -> Result<f64> {
        let (d1, d2) = self.kl_pair(lambda_i)?;
        Ok(lambda_i * d1 + (1.0 - lambda_i) * self.ratio * d2)
    }

    fn phi_derivative(&self, lambda_i: f64) -> Result<f64> {
        let (d1, d2) = self.kl_pair(lambda_i)?;
        Ok(d1 - self.ratio * d2)
    }
}

/// The reduced objective Φ(λ) at odd-arm mass `lambda_i` ∈ [0, 1].
pub fn phi(family: &FamilyDescriptor, config: &ArmConfiguration, lambda_i: f64) -> Result<f64> {
    Objective::new(family, config)?.phi(lambda_i)
}

/// Φ'(λ) = D(η₁‖η̃) − r·D(η₂‖η̃); strictly decreasing in λ.
pub fn phi_derivative(
    family: &FamilyDescriptor,
    config: &ArmConfiguration,
    lambda_i: f64,
) -> Result<f64> {
    Objective::new(family, config)?.phi_derivative(lambda_i)
}

/// Maximizes Φ by bisection on its monotone derivative and assembles the
/// full sampling distribution.
pub fn solve_lambda_star(
    family: &FamilyDescriptor,
    config: &ArmConfiguration,
) -> Result<ComplexityResult> {
    if config.eta_odd == config.eta_common {
        return Err(Error::DegenerateConfiguration);
    }
    let obj = Objective::new(family, config)?;
    if obj.kappa1 == obj.kappa2 {
        return Err(Error::DegenerateConfiguration);
    }

    let mut lo = ENDPOINT_OFFSET;
    let mut hi = 1.0 - ENDPOINT_OFFSET;
    // Φ'(0+) = D(η₁‖η₂) > 0 and Φ'(1−) = −r·D(η₂‖η₁) < 0 for η₁ ≠ η₂.
    if !(obj.phi_derivative(lo)? > 0.0 && obj.phi_derivative(hi)? < 0.0) {
        return Err(Error::DegenerateConfiguration);
    }
    let mut mid = 0.5;
    while hi - lo > WIDTH_TOL {
        mid = 0.5 * (lo + hi);
        let d = obj.phi_derivative(mid)?;
        if d.abs() < DERIV_TOL {
            break;
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let lambda_odd = mid;
    let d_star = obj.phi(lambda_odd)?;
    let kt = kappa_tilde(lambda_odd, &obj.kappa1, &obj.kappa2, config.num_arms);
    let eta_tilde = family.eta_of_kappa(&kt)?;
    let off_mass = (1.0 - lambda_odd) / (config.num_arms as f64 - 1.0);
    let mut lambda_star = vec![off_mass; config.num_arms];
    lambda_star[config.odd_index] = lambda_odd;

    Ok(ComplexityResult {
        d_star,
        lambda_star,
        lambda_odd,
        lambda_hat: lambda_hat(lambda_odd, config.num_arms),
        kappa_tilde: kt,
        eta_tilde,
    })
}

/// Binary relative entropy d_b(u, 1−u) = u log(u/(1−u)) + (1−u) log((1−u)/u).
pub fn binary_kl(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "binary_kl argument must be in (0,1), got {u}"
        )));
    }
    Ok(u * (u / (1.0 - u)).ln() + (1.0 - u) * ((1.0 - u) / u).ln())
}

/// Information-theoretic lower bound on the conditional expected stopping
/// time (and the total cost): d_b(α, 1−α) / D*.
pub fn lower_bound(alpha_max: f64, d_star: f64) -> Result<f64> {
    if d_star <= 0.0 || d_star.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "d_star must be positive, got {d_star}"
        )));
    }
    Ok(binary_kl(alpha_max)? / d_star)
}

/// Idealized asymptote log(L)/D*; this is the quantity the stopping-time
/// plots use for their lower-bound series.
pub fn lower_bound_asymptote(log_l: f64, d_star: f64) -> f64 {
    log_l / d_star
}
