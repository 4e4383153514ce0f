//! Exponential-family numerics.
//!
//! Every family is described by a density `f(x|η) = h(x) exp(ηᵀT(x) − A(η))`
//! with log-partition `A`, convex dual `F(κ) = sup_η {ηᵀκ − A(η)}`, and the
//! gradient maps `κ(η) = ∇A(η)`, `η(κ) = ∇F(κ)` linking the two coordinate
//! systems. Five concrete families are implemented behind one descriptor so
//! the decision-making layers stay family-agnostic:
//!
//! | family                      | η domain   | T(x)      | κ domain        |
//! |-----------------------------|------------|-----------|-----------------|
//! | Poisson                     | ℝ          | x         | κ > 0           |
//! | Bernoulli                   | ℝ          | x         | 0 < κ < 1       |
//! | Gaussian, known variance    | ℝ          | x/σ       | ℝ               |
//! | Gaussian, zero mean         | η < 0      | x²        | κ > 0           |
//! | Gaussian, mean and variance | η₂ < 0     | (x, x²)   | κ₂ − κ₁² > 0    |
//!
//! Expectation parameters produced by estimation are clamped to the domain
//! interior with margin [`EPS_DOM`] before `F` or `η(κ)` is evaluated; the
//! dual diverges at the boundary (zero empirical variance, all-ones Bernoulli
//! traces) and downstream code assumes interior points.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson as PoissonDist};

use crate::{Error, Result};

/// Margin used when clamping estimated expectation parameters to the domain
/// interior.
pub const EPS_DOM: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Small parameter vectors
// ---------------------------------------------------------------------------

/// Fixed-capacity value vector; the implemented families have dimension 1 or 2.
///
/// Used both for parameters and for sufficient-statistic accumulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVec {
    data: [f64; 2],
    dim: usize,
}

impl ParamVec {
    pub fn scalar(x: f64) -> Self {
        Self {
            data: [x, 0.0],
            dim: 1,
        }
    }

    pub fn pair(a: f64, b: f64) -> Self {
        Self {
            data: [a, b],
            dim: 2,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "supported dimensions are 1 and 2");
        Self {
            data: [0.0, 0.0],
            dim,
        }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        match v {
            [x] => Self::scalar(*x),
            [a, b] => Self::pair(*a, *b),
            _ => panic!("supported dimensions are 1 and 2"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim);
        self.data[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            data: [self.data[0] + other.data[0], self.data[1] + other.data[1]],
            dim: self.dim,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            data: [self.data[0] - other.data[0], self.data[1] - other.data[1]],
            dim: self.dim,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            data: [c * self.data[0], c * self.data[1]],
            dim: self.dim,
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        self.data[0] += other.data[0];
        self.data[1] += other.data[1];
    }

    pub fn norm_inf(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::fmt::Display for ParamVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.data[0])
        } else {
            write!(f, "({}, {})", self.data[0], self.data[1])
        }
    }
}

/// Natural (canonical) parameter η of a family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalParam(pub ParamVec);

/// Expectation parameter κ = E[T(X)] of a family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationParam(pub ParamVec);

impl NaturalParam {
    pub fn scalar(x: f64) -> Self {
        Self(ParamVec::scalar(x))
    }
    pub fn pair(a: f64, b: f64) -> Self {
        Self(ParamVec::pair(a, b))
    }
    pub fn dim(&self) -> usize {
        self.0.dim()
    }
    pub fn get(&self, i: usize) -> f64 {
        self.0.get(i)
    }
}

impl ExpectationParam {
    pub fn scalar(x: f64) -> Self {
        Self(ParamVec::scalar(x))
    }
    pub fn pair(a: f64, b: f64) -> Self {
        Self(ParamVec::pair(a, b))
    }
    pub fn dim(&self) -> usize {
        self.0.dim()
    }
    pub fn get(&self, i: usize) -> f64 {
        self.0.get(i)
    }
}

impl std::fmt::Display for NaturalParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for ExpectationParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Conjugate-prior hyper-parameters: pseudo sufficient statistic τ and
/// pseudo count n₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub tau: ParamVec,
    pub n0: f64,
}

impl HyperParams {
    pub fn new(tau: ParamVec, n0: f64) -> Self {
        Self { tau, n0 }
    }
}

/// A single observation. All implemented families emit scalar observations;
/// the sufficient statistic `T(x)` may still be a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub f64);

/// Symmetric dim×dim matrix (Hessians of the dual `F`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    m: [[f64; 2]; 2],
    dim: usize,
}

impl SymMatrix {
    pub fn scalar(v: f64) -> Self {
        Self {
            m: [[v, 0.0], [0.0, 0.0]],
            dim: 1,
        }
    }

    pub fn sym2(a11: f64, a12: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a12, a22]],
            dim: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j]
    }

    /// vᵀ M v.
    pub fn quadratic_form(&self, v: &ParamVec) -> f64 {
        debug_assert_eq!(v.dim(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v.get(i) * self.m[i][j] * v.get(j);
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Family descriptor
// ---------------------------------------------------------------------------

/// Which concrete exponential family an arm follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// Counts; η = log rate, T(x) = x, A(η) = eᵞ.
    Poisson,
    /// Coin flips; η = log-odds, T(x) = x, A(η) = log(1 + eᵞ).
    Bernoulli,
    /// Gaussian with known standard deviation σ; η = μ/σ, T(x) = x/σ.
    GaussianKnownVar { sigma: f64 },
    /// Zero-mean Gaussian with unknown variance; η = −1/(2σ²), T(x) = x².
    GaussianZeroMeanUnknownVar,
    /// Gaussian with unknown mean and variance; η = (μ/σ², −1/(2σ²)),
    /// T(x) = (x, x²).
    VectorGaussian,
}

/// An exponential-family instance. All operations are pure; a descriptor is
/// freely shareable across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyDescriptor {
    kind: FamilyKind,
}

impl FamilyDescriptor {
    pub fn poisson() -> Self {
        Self {
            kind: FamilyKind::Poisson,
        }
    }

    pub fn bernoulli() -> Self {
        Self {
            kind: FamilyKind::Bernoulli,
        }
    }

    pub fn gaussian_known_var(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                family: "gaussian-mean",
                reason: format!("sigma must be positive and finite, got {sigma}"),
            });
        }
        Ok(Self {
            kind: FamilyKind::GaussianKnownVar { sigma },
        })
    }

    pub fn gaussian_zero_mean_unknown_var() -> Self {
        Self {
            kind: FamilyKind::GaussianZeroMeanUnknownVar,
        }
    }

    pub fn vector_gaussian() -> Self {
        Self {
            kind: FamilyKind::VectorGaussian,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::VectorGaussian => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Poisson => "poisson",
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::GaussianKnownVar { .. } => "gaussian-mean",
            FamilyKind::GaussianZeroMeanUnknownVar => "gaussian-variance",
            FamilyKind::VectorGaussian => "vector-gaussian",
        }
    }

    /// Minimum samples per arm before the ML expectation estimate is usable
    /// (`F(κ̂)` finite): 2 for the vector Gaussian, whose estimate needs a
    /// positive empirical variance, 1 otherwise.
    pub fn min_samples(&self) -> u64 {
        match self.kind {
            FamilyKind::VectorGaussian => 2,
            _ => 1,
        }
    }

    /// Proper unit-pseudo-count hyper-parameters used as defaults.
    pub fn default_hyper(&self) -> HyperParams {
        match self.kind {
            FamilyKind::Poisson => HyperParams::new(ParamVec::scalar(1.0), 1.0),
            FamilyKind::Bernoulli => HyperParams::new(ParamVec::scalar(1.0), 2.0),
            FamilyKind::GaussianKnownVar { .. } => HyperParams::new(ParamVec::scalar(0.0), 1.0),
            FamilyKind::GaussianZeroMeanUnknownVar => HyperParams::new(ParamVec::scalar(1.0), 1.0),
            FamilyKind::VectorGaussian => HyperParams::new(ParamVec::pair(0.0, 1.0), 1.0),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::InvalidParameter {
                family: self.name(),
                reason: format!("expected dimension {}, got {}", self.dim(), dim),
            });
        }
        Ok(())
    }

    /// Validates η against the open natural domain.
    pub fn check_natural(&self, eta: &NaturalParam) -> Result<()> {
        self.check_dim(eta.dim())?;
        let bad = |reason: String| Error::InvalidParameter {
            family: self.name(),
            reason,
        };
        if eta.0.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("eta must be finite, got {}", eta.0)));
        }
        match self.kind {
            FamilyKind::Poisson | FamilyKind::Bernoulli | FamilyKind::GaussianKnownVar { .. } => {
                Ok(())
            }
            FamilyKind::GaussianZeroMeanUnknownVar => {
                if eta.get(0) < 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!("eta must be negative, got {}", eta.get(0))))
                }
            }
            FamilyKind::VectorGaussian => {
                if eta.get(1) < 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!("eta(2) must be negative, got {}", eta.get(1))))
                }
            }
        }
    }

    /// Validates κ against the open expectation domain.
    pub fn check_expectation(&self, kappa: &ExpectationParam) -> Result<()> {
        self.check_dim(kappa.dim())?;
        let bad = |reason: String| Error::InvalidParameter {
            family: self.name(),
            reason,
        };
        if kappa.0.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("kappa must be finite, got {}", kappa.0)));
        }
        match self.kind {
            FamilyKind::Poisson | FamilyKind::GaussianZeroMeanUnknownVar => {
                if kappa.get(0) > 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!("kappa must be positive, got {}", kappa.get(0))))
                }
            }
            FamilyKind::Bernoulli => {
                let p = kappa.get(0);
                if p > 0.0 && p < 1.0 {
                    Ok(())
                } else {
                    Err(bad(format!("kappa must lie in (0, 1), got {p}")))
                }
            }
            FamilyKind::GaussianKnownVar { .. } => Ok(()),
            FamilyKind::VectorGaussian => {
                let var = kappa.get(1) - kappa.get(0) * kappa.get(0);
                if var > 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!(
                        "kappa(2) − kappa(1)² must be positive, got {var}"
                    )))
                }
            }
        }
    }

    /// Log-partition A(η).
    pub fn log_partition(&self, eta: &NaturalParam) -> Result<f64> {
        self.check_natural(eta)?;
        Ok(match self.kind {
            FamilyKind::Poisson => eta.get(0).exp(),
            FamilyKind::Bernoulli => softplus(eta.get(0)),
            FamilyKind::GaussianKnownVar { .. } => 0.5 * eta.get(0) * eta.get(0),
            FamilyKind::GaussianZeroMeanUnknownVar => -0.5 * (-2.0 * eta.get(0)).ln(),
            FamilyKind::VectorGaussian => {
                let (e1, e2) = (eta.get(0), eta.get(1));
                -e1 * e1 / (4.0 * e2) - 0.5 * (-2.0 * e2).ln()
            }
        })
    }

    /// Convex dual F(κ) = sup_η {ηᵀκ − A(η)}.
    pub fn dual(&self, kappa: &ExpectationParam) -> Result<f64> {
        self.check_expectation(kappa)?;
        Ok(match self.kind {
            FamilyKind::Poisson => {
                let k = kappa.get(0);
                k * k.ln() - k
            }
            FamilyKind::Bernoulli => {
                let p = kappa.get(0);
                p * p.ln() + (1.0 - p) * (1.0 - p).ln()
            }
            FamilyKind::GaussianKnownVar { .. } => 0.5 * kappa.get(0) * kappa.get(0),
            FamilyKind::GaussianZeroMeanUnknownVar => -0.5 * (1.0 + kappa.get(0).ln()),
            FamilyKind::VectorGaussian => {
                let var = kappa.get(1) - kappa.get(0) * kappa.get(0);
                -0.5 - 0.5 * var.ln()
            }
        })
    }

    /// Gradient map κ(η) = ∇A(η).
    pub fn kappa_of_eta(&self, eta: &NaturalParam) -> Result<ExpectationParam> {
        self.check_natural(eta)?;
        Ok(match self.kind {
            FamilyKind::Poisson => ExpectationParam::scalar(eta.get(0).exp()),
            FamilyKind::Bernoulli => ExpectationParam::scalar(sigmoid(eta.get(0))),
            FamilyKind::GaussianKnownVar { .. } => ExpectationParam::scalar(eta.get(0)),
            FamilyKind::GaussianZeroMeanUnknownVar => ExpectationParam::scalar(-0.5 / eta.get(0)),
            FamilyKind::VectorGaussian => {
                let (e1, e2) = (eta.get(0), eta.get(1));
                let mean = -e1 / (2.0 * e2);
                ExpectationParam::pair(mean, mean * mean - 0.5 / e2)
            }
        })
    }

    /// Gradient map η(κ) = ∇F(κ).
    pub fn eta_of_kappa(&self, kappa: &ExpectationParam) -> Result<NaturalParam> {
        self.check_expectation(kappa)?;
        Ok(match self.kind {
            FamilyKind::Poisson => NaturalParam::scalar(kappa.get(0).ln()),
            FamilyKind::Bernoulli => {
                let p = kappa.get(0);
                NaturalParam::scalar((p / (1.0 - p)).ln())
            }
            FamilyKind::GaussianKnownVar { .. } => NaturalParam::scalar(kappa.get(0)),
            FamilyKind::GaussianZeroMeanUnknownVar => NaturalParam::scalar(-0.5 / kappa.get(0)),
            FamilyKind::VectorGaussian => {
                let var = kappa.get(1) - kappa.get(0) * kappa.get(0);
                NaturalParam::pair(kappa.get(0) / var, -0.5 / var)
            }
        })
    }

    /// Relative entropy D(η₁‖η₂) = (η₁−η₂)ᵀκ₁ − A(η₁) + A(η₂).
    pub fn kl(&self, eta1: &NaturalParam, eta2: &NaturalParam) -> Result<f64> {
        let kappa1 = self.kappa_of_eta(eta1)?;
        let a1 = self.log_partition(eta1)?;
        let a2 = self.log_partition(eta2)?;
        Ok(eta1.0.sub(&eta2.0).dot(&kappa1.0) - a1 + a2)
    }

    /// Relative entropy in expectation coordinates:
    /// D(κ₁‖κ₂) = (κ₂−κ₁)ᵀη₂ + F(κ₁) − F(κ₂).
    pub fn kl_expectation(
        &self,
        kappa1: &ExpectationParam,
        kappa2: &ExpectationParam,
    ) -> Result<f64> {
        let eta2 = self.eta_of_kappa(kappa2)?;
        let f1 = self.dual(kappa1)?;
        let f2 = self.dual(kappa2)?;
        Ok(kappa2.0.sub(&kappa1.0).dot(&eta2.0) + f1 - f2)
    }

    /// Sufficient statistic T(x).
    pub fn sufficient_stat(&self, x: Observation) -> Result<ParamVec> {
        self.check_support(x)?;
        Ok(match self.kind {
            FamilyKind::Poisson | FamilyKind::Bernoulli => ParamVec::scalar(x.0),
            FamilyKind::GaussianKnownVar { sigma } => ParamVec::scalar(x.0 / sigma),
            FamilyKind::GaussianZeroMeanUnknownVar => ParamVec::scalar(x.0 * x.0),
            FamilyKind::VectorGaussian => ParamVec::pair(x.0, x.0 * x.0),
        })
    }

    /// Validates an observation against the family support.
    pub fn check_support(&self, x: Observation) -> Result<()> {
        let ok = match self.kind {
            FamilyKind::Poisson => x.0.is_finite() && x.0 >= 0.0 && x.0.fract() == 0.0,
            FamilyKind::Bernoulli => x.0 == 0.0 || x.0 == 1.0,
            _ => x.0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedObservation {
                family: self.name(),
                value: x.0,
            })
        }
    }

    /// Draws one observation from f(·|η).
    pub fn sample<R: Rng + ?Sized>(&self, eta: &NaturalParam, rng: &mut R) -> Result<Observation> {
        self.check_natural(eta)?;
        Ok(Observation(match self.kind {
            FamilyKind::Poisson => {
                let rate = eta.get(0).exp();
                PoissonDist::new(rate)
                    .expect("rate is positive and finite for in-domain eta")
                    .sample(rng)
            }
            FamilyKind::Bernoulli => {
                let p = sigmoid(eta.get(0));
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::GaussianKnownVar { sigma } => {
                let mean = eta.get(0) * sigma;
                Normal::new(mean, sigma).expect("sigma > 0").sample(rng)
            }
            FamilyKind::GaussianZeroMeanUnknownVar => {
                let sd = (-0.5 / eta.get(0)).sqrt();
                Normal::new(0.0, sd).expect("sd > 0").sample(rng)
            }
            FamilyKind::VectorGaussian => {
                let var = -0.5 / eta.get(1);
                let mean = eta.get(0) * var;
                Normal::new(mean, var.sqrt()).expect("var > 0").sample(rng)
            }
        }))
    }

    /// Validates hyper-parameters against the proper-prior region.
    pub fn check_hyper(&self, h: &HyperParams) -> Result<()> {
        let bad = |reason: String| Error::ImproperHyper {
            family: self.name(),
            reason,
        };
        if h.tau.dim() != self.dim() {
            return Err(bad(format!("tau must have dimension {}", self.dim())));
        }
        if !(h.n0 > 0.0 && h.n0.is_finite()) {
            return Err(bad(format!("n0 must be positive, got {}", h.n0)));
        }
        if h.tau.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("tau must be finite, got {}", h.tau)));
        }
        match self.kind {
            FamilyKind::Poisson | FamilyKind::GaussianZeroMeanUnknownVar => {
                if h.tau.get(0) > 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!("tau must be positive, got {}", h.tau.get(0))))
                }
            }
            FamilyKind::Bernoulli => {
                let t = h.tau.get(0);
                if t > 0.0 && t < h.n0 {
                    Ok(())
                } else {
                    Err(bad(format!(
                        "tau must lie in (0, n0), got tau={} n0={}",
                        t, h.n0
                    )))
                }
            }
            FamilyKind::GaussianKnownVar { .. } => Ok(()),
            FamilyKind::VectorGaussian => {
                let c = h.tau.get(1) - h.tau.get(0) * h.tau.get(0) / h.n0;
                if c > 0.0 {
                    Ok(())
                } else {
                    Err(bad(format!(
                        "tau(2) − tau(1)²/n0 must be positive, got {c}"
                    )))
                }
            }
        }
    }

    /// Log-normalizer of the conjugate prior:
    /// −log H(τ, n₀) = log ∫ exp(τᵀη − n₀ A(η)) dη.
    ///
    /// Closed forms per family; the vector-Gaussian case follows from a
    /// Gaussian integral over η₁ and a Gamma integral over −η₂.
    pub fn log_prior_normalizer(&self, h: &HyperParams) -> Result<f64> {
        self.check_hyper(h)?;
        let t = h.tau;
        let n0 = h.n0;
        Ok(match self.kind {
            FamilyKind::Poisson => libm::lgamma(t.get(0)) - t.get(0) * n0.ln(),
            FamilyKind::Bernoulli => {
                // log B(τ, n0 − τ)
                libm::lgamma(t.get(0)) + libm::lgamma(n0 - t.get(0)) - libm::lgamma(n0)
            }
            FamilyKind::GaussianKnownVar { .. } => {
                0.5 * (2.0 * std::f64::consts::PI / n0).ln() + t.get(0) * t.get(0) / (2.0 * n0)
            }
            FamilyKind::GaussianZeroMeanUnknownVar => {
                0.5 * n0 * 2f64.ln() + libm::lgamma(0.5 * n0 + 1.0)
                    - (0.5 * n0 + 1.0) * t.get(0).ln()
            }
            FamilyKind::VectorGaussian => {
                let c = t.get(1) - t.get(0) * t.get(0) / n0;
                0.5 * n0 * 2f64.ln()
                    + 0.5 * (4.0 * std::f64::consts::PI / n0).ln()
                    + libm::lgamma(0.5 * (n0 + 3.0))
                    - 0.5 * (n0 + 3.0) * c.ln()
            }
        })
    }

    /// Hessian ∇²F(κ); symmetric positive definite on the domain interior.
    pub fn hessian_f(&self, kappa: &ExpectationParam) -> Result<SymMatrix> {
        self.check_expectation(kappa)?;
        Ok(match self.kind {
            FamilyKind::Poisson => SymMatrix::scalar(1.0 / kappa.get(0)),
            FamilyKind::Bernoulli => {
                let p = kappa.get(0);
                SymMatrix::scalar(1.0 / (p * (1.0 - p)))
            }
            FamilyKind::GaussianKnownVar { .. } => SymMatrix::scalar(1.0),
            FamilyKind::GaussianZeroMeanUnknownVar => {
                let k = kappa.get(0);
                SymMatrix::scalar(0.5 / (k * k))
            }
            FamilyKind::VectorGaussian => {
                let (k1, k2) = (kappa.get(0), kappa.get(1));
                let var = k2 - k1 * k1;
                let s = 1.0 / (var * var);
                SymMatrix::sym2(s * (k1 * k1 + k2), -s * k1, 0.5 * s)
            }
        })
    }

    /// Clamps an estimated expectation parameter to the domain interior with
    /// margin [`EPS_DOM`]. Identity for parameters already in the interior.
    pub fn clamp_to_interior(&self, kappa: ExpectationParam) -> ExpectationParam {
        match self.kind {
            FamilyKind::Poisson | FamilyKind::GaussianZeroMeanUnknownVar => {
                ExpectationParam::scalar(kappa.get(0).max(EPS_DOM))
            }
            FamilyKind::Bernoulli => {
                ExpectationParam::scalar(kappa.get(0).clamp(EPS_DOM, 1.0 - EPS_DOM))
            }
            FamilyKind::GaussianKnownVar { .. } => kappa,
            FamilyKind::VectorGaussian => {
                let (k1, k2) = (kappa.get(0), kappa.get(1));
                if k2 - k1 * k1 < EPS_DOM {
                    ExpectationParam::pair(k1, k1 * k1 + EPS_DOM)
                } else {
                    kappa
                }
            }
        }
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
