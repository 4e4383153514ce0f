//! Numerical verification that the optimal sampling weights stay bounded
//! away from zero for every ground truth (nontrivial sampling of all arms).
//!
//! The reparameterized optimum λ̂* solves `D(κ₁‖κ̃) = r·D(κ₂‖κ̃)` with
//! `κ̃ = λ̂κ₁ + (1−λ̂)κ₂` and r between 1/2 and 2 for K ≥ 3. Writing both
//! divergences as second-order Taylor remainders turns the sufficient
//! condition "λ̂* is bounded away from 1" into a sign condition on
//!
//! ```text
//! ∫_λ̂¹ (1−u)·ΔκᵀH(κ₂+uΔκ)Δκ du  −  r·∫₀^λ̂ u·ΔκᵀH(κ₂+uΔκ)Δκ du
//! ```
//!
//! with `H = ∇²F` and `Δκ = κ₁ − κ₂`: if the expression is negative at some
//! λ̂ < 1 for every parameter pair, the optimum lies below that λ̂. The r = 2
//! side (bounded away from 0) reduces to the r = 1/2 side by swapping the
//! pair and reflecting λ̂ ↦ 1−λ̂. Poisson and the two scalar Gaussian
//! families admit analytic windows; Bernoulli and the vector Gaussian are
//! checked by grid scans. The scanned maxima are grid-dependent; only their
//! signs at the reported λ̂ values are meaningful.

use rayon::prelude::*;

use crate::expfam::{ExpectationParam, FamilyDescriptor, FamilyKind, ParamVec};
use crate::quad;
use crate::{Error, Result};

/// Admissible λ̂ window, where known analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticWindow {
    /// λ̂ in the open interval (lo, hi) satisfies the sufficient conditions.
    Interval { lo: f64, hi: f64 },
    /// No analytic window; use the numeric scan.
    NumericOnly,
}

/// Analytic λ̂ windows for the families where the sufficient inequalities
/// have closed-form solutions.
pub fn analytic_thresholds(family: &FamilyDescriptor) -> AnalyticWindow {
    match family.kind() {
        FamilyKind::Poisson => AnalyticWindow::Interval { lo: 0.59, hi: 0.82 },
        FamilyKind::GaussianKnownVar { .. } => AnalyticWindow::Interval { lo: 0.59, hi: 1.0 },
        FamilyKind::GaussianZeroMeanUnknownVar => AnalyticWindow::Interval { lo: 0.59, hi: 1.0 },
        FamilyKind::Bernoulli | FamilyKind::VectorGaussian => AnalyticWindow::NumericOnly,
    }
}

/// Evaluates the Hessian-integral expression by adaptive quadrature.
///
/// Equals `D(κ₁‖κ̃) − r·D(κ̃₂‖κ̃)` with `κ̃ = λ̂κ₁ + (1−λ̂)κ₂`; the scans use
/// this route, the closed-form KL difference serves as its independent
/// check. Returns 0 for coincident pairs (the limiting value).
pub fn integral_form(
    family: &FamilyDescriptor,
    kappa1: &ExpectationParam,
    kappa2: &ExpectationParam,
    lambda_hat: f64,
    ratio: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda_hat) {
        return Err(Error::InvalidGrid(format!(
            "lambda_hat must be in [0,1], got {lambda_hat}"
        )));
    }
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "ratio must be positive, got {ratio}"
        )));
    }
    family.check_expectation(kappa1).map_err(grid_error)?;
    family.check_expectation(kappa2).map_err(grid_error)?;
    if kappa1 == kappa2 {
        return Ok(0.0);
    }
    let delta = kappa1.0.sub(&kappa2.0);
    let quad_form = |u: f64| -> f64 {
        let point = ExpectationParam(kappa2.0.add(&delta.scale(u)));
        match family.hessian_f(&point) {
            Ok(h) => h.quadratic_form(&delta),
            Err(_) => f64::NAN, // boundary contact surfaces as NaN below
        }
    };
    let first = quad::integrate_graded(
        |u| (1.0 - u) * quad_form(u),
        lambda_hat,
        1.0,
        quad::DEFAULT_TOL,
    );
    let second = quad::integrate_graded(|u| u * quad_form(u), 0.0, lambda_hat, quad::DEFAULT_TOL);
    let value = first - ratio * second;
    if value.is_nan() {
        return Err(Error::InvalidGrid(format!(
            "segment between {} and {} leaves the {} domain",
            kappa2.0,
            kappa1.0,
            family.name()
        )));
    }
    Ok(value)
}

fn grid_error(e: Error) -> Error {
    Error::InvalidGrid(e.to_string())
}

/// A grid scan request.
#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub family: FamilyDescriptor,
    pub kappa_pairs: Vec<(ExpectationParam, ExpectationParam)>,
    pub lambda_hats: Vec<f64>,
    /// r in the sufficient inequality; 1/2 covers the λ̂ < 1 side, the r = 2
    /// side follows by the reflection identity.
    pub ratio: f64,
}

impl ScanSpec {
    /// Scan a family's default grid at the given λ̂ values with r = 1/2.
    pub fn with_default_grid(family: FamilyDescriptor, lambda_hats: Vec<f64>) -> Result<Self> {
        let spec = Self {
            kappa_pairs: default_grid(&family),
            family,
            lambda_hats,
            ratio: 0.5,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_pairs.is_empty() {
            return Err(Error::InvalidGrid("kappa grid must be nonempty".into()));
        }
        if self.lambda_hats.is_empty() {
            return Err(Error::InvalidGrid(
                "lambda_hat grid must be nonempty".into(),
            ));
        }
        for lh in &self.lambda_hats {
            if !(0.0..=1.0).contains(lh) {
                return Err(Error::InvalidGrid(format!("lambda_hat {lh} outside [0,1]")));
            }
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "ratio must be positive, got {}",
                self.ratio
            )));
        }
        for (k1, k2) in &self.kappa_pairs {
            self.family.check_expectation(k1).map_err(grid_error)?;
            self.family.check_expectation(k2).map_err(grid_error)?;
            if k1 == k2 {
                return Err(Error::InvalidGrid(format!("coincident grid pair {}", k1.0)));
            }
        }
        Ok(())
    }
}

/// Per-λ̂ scan outcome: the grid maximum and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub lambda_hat: f64,
    pub max_value: f64,
    pub argmax: (ExpectationParam, ExpectationParam),
}

/// Scans the grid: for each λ̂, the maximum of [`integral_form`] over all
/// pairs. The sufficient condition for nontrivial sampling at that λ̂ is a
/// strictly negative maximum.
pub fn scan(spec: &ScanSpec) -> Result<Vec<ScanRow>> {
    spec.validate()?;
    spec.lambda_hats
        .iter()
        .map(|&lh| {
            let best = spec
                .kappa_pairs
                .par_iter()
                .map(|(k1, k2)| {
                    integral_form(&spec.family, k1, k2, lh, spec.ratio).map(|v| (v, (*k1, *k2)))
                })
                .try_reduce_with(|a, b| Ok(if a.0 >= b.0 { a } else { b }))
                .expect("grid is nonempty")?;
            Ok(ScanRow {
                lambda_hat: lh,
                max_value: best.0,
                argmax: best.1,
            })
        })
        .collect()
}

/// Delimited-text scan output: `lambda_hat,max_value,argmax_kappa1,argmax_kappa2`.
pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("lambda_hat,max_value,argmax_kappa1,argmax_kappa2\n");
    for row in rows {
        let fmt_kappa = |k: &ExpectationParam| {
            k.0.as_slice()
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(";")
        };
        out.push_str(&format!(
            "{},{:.6},{},{}\n",
            row.lambda_hat,
            row.max_value,
            fmt_kappa(&row.argmax.0),
            fmt_kappa(&row.argmax.1)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Default grids
// ---------------------------------------------------------------------------

fn scalar_pairs(points: &[f64]) -> Vec<(ExpectationParam, ExpectationParam)> {
    let mut pairs = Vec::new();
    for &a in points {
        for &b in points {
            if a != b {
                pairs.push((ExpectationParam::scalar(a), ExpectationParam::scalar(b)));
            }
        }
    }
    pairs
}

fn range_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Default scan grid per family.
///
/// - Bernoulli: κ ∈ {0.05, 0.10, …, 0.95}.
/// - Poisson: κ ∈ {0.5, 1.0, …, 10.0}. The inequality genuinely fails at
///   λ̂ = 0.7 once κ ratios grow past ≈40, so the preset keeps ratios ≤ 20.
/// - Gaussian known variance: κ ∈ {−3, −2.5, …, 3}.
/// - Gaussian zero mean: κ ∈ {1.0, 1.5, …, 3.5}; the λ̂ = 0.7 sign flips for
///   variance ratios beyond ≈4.3.
/// - Vector Gaussian: means {0, 1, …, 20} with a shared variance scanned
///   over {1, 2, …, 21} (three grid dimensions, one unit steps).
pub fn default_grid(family: &FamilyDescriptor) -> Vec<(ExpectationParam, ExpectationParam)> {
    match family.kind() {
        FamilyKind::Bernoulli => scalar_pairs(&range_grid(0.05, 0.95, 0.05)),
        FamilyKind::Poisson => scalar_pairs(&range_grid(0.5, 10.0, 0.5)),
        FamilyKind::GaussianKnownVar { .. } => scalar_pairs(&range_grid(-3.0, 3.0, 0.5)),
        FamilyKind::GaussianZeroMeanUnknownVar => scalar_pairs(&range_grid(1.0, 3.5, 0.5)),
        FamilyKind::VectorGaussian => {
            let means = range_grid(0.0, 20.0, 1.0);
            let vars = range_grid(1.0, 21.0, 1.0);
            let mut pairs = Vec::new();
            for &v in &vars {
                for &m1 in &means {
                    for &m2 in &means {
                        if m1 != m2 {
                            pairs.push((
                                ExpectationParam(ParamVec::pair(m1, m1 * m1 + v)),
                                ExpectationParam(ParamVec::pair(m2, m2 * m2 + v)),
                            ));
                        }
                    }
                }
            }
            pairs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kl_difference(
        f: &FamilyDescriptor,
        k1: &ExpectationParam,
        k2: &ExpectationParam,
        lh: f64,
        r: f64,
    ) -> f64 {
        let kt = ExpectationParam(k1.0.scale(lh).add(&k2.0.scale(1.0 - lh)));
        f.kl_expectation(k1, &kt).unwrap() - r * f.kl_expectation(k2, &kt).unwrap()
    }

    fn random_kappa<R: Rng>(f: &FamilyDescriptor, rng: &mut R) -> ExpectationParam {
        f.kappa_of_eta(&crate::testutil::random_eta(f, rng))
            .unwrap()
    }

    #[test]
    fn matches_direct_kl_difference_on_fuzzed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for f in crate::testutil::all_families() {
            for _ in 0..50 {
                let k1 = random_kappa(&f, &mut rng);
                let k2 = random_kappa(&f, &mut rng);
                if k1 == k2 {
                    continue;
                }
                let lh: f64 = rng.random_range(0.05..0.95);
                let got = integral_form(&f, &k1, &k2, lh, 0.5).unwrap();
                let want = kl_difference(&f, &k1, &k2, lh, 0.5);
                assert!(
                    (got - want).abs() < 1e-7 * (1.0 + want.abs()),
                    "{}: {got} vs {want} at lh {lh}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn lambda_hat_one_reduces_to_reverse_kl() {
        let f = FamilyDescriptor::bernoulli();
        let k1 = ExpectationParam::scalar(0.2);
        let k2 = ExpectationParam::scalar(0.7);
        for r in [0.5, 1.0, 2.0] {
            let got = integral_form(&f, &k1, &k2, 1.0, r).unwrap();
            let want = -r * f.kl_expectation(&k2, &k1).unwrap();
            assert!((got - want).abs() < 1e-8, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn coincident_pair_gives_zero() {
        let f = FamilyDescriptor::poisson();
        let k = ExpectationParam::scalar(2.0);
        assert_eq!(integral_form(&f, &k, &k, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn reflection_identity_links_the_two_ratios() {
        // value_{r=2}(k1, k2, lh) = −2 · value_{r=1/2}(k2, k1, 1−lh)
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for f in crate::testutil::all_families() {
            for _ in 0..20 {
                let k1 = random_kappa(&f, &mut rng);
                let k2 = random_kappa(&f, &mut rng);
                if k1 == k2 {
                    continue;
                }
                let lh: f64 = rng.random_range(0.05..0.95);
                let lhs = integral_form(&f, &k1, &k2, lh, 2.0).unwrap();
                let rhs = -2.0 * integral_form(&f, &k2, &k1, 1.0 - lh, 0.5).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()),
                    "{}: {lhs} vs {rhs}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn analytic_windows() {
        assert_eq!(
            analytic_thresholds(&FamilyDescriptor::poisson()),
            AnalyticWindow::Interval { lo: 0.59, hi: 0.82 }
        );
        assert_eq!(
            analytic_thresholds(&FamilyDescriptor::gaussian_known_var(1.0).unwrap()),
            AnalyticWindow::Interval { lo: 0.59, hi: 1.0 }
        );
        assert_eq!(
            analytic_thresholds(&FamilyDescriptor::gaussian_zero_mean_unknown_var()),
            AnalyticWindow::Interval { lo: 0.59, hi: 1.0 }
        );
        assert_eq!(
            analytic_thresholds(&FamilyDescriptor::bernoulli()),
            AnalyticWindow::NumericOnly
        );
        assert_eq!(
            analytic_thresholds(&FamilyDescriptor::vector_gaussian()),
            AnalyticWindow::NumericOnly
        );
    }

    #[test]
    fn gaussian_mean_sign_flips_exactly_at_the_analytic_point() {
        // constant Hessian: value = Δκ²[(1−λ̂)²/2 − r·λ̂²/2]; root at 2−√2
        let f = FamilyDescriptor::gaussian_known_var(1.0).unwrap();
        let k1 = ExpectationParam::scalar(-1.0);
        let k2 = ExpectationParam::scalar(2.0);
        let root = 2.0 - 2f64.sqrt();
        let below = integral_form(&f, &k1, &k2, root - 0.01, 0.5).unwrap();
        let above = integral_form(&f, &k1, &k2, root + 0.01, 0.5).unwrap();
        assert!(below > 0.0 && above < 0.0, "{below} / {above}");
    }

    #[test]
    fn poisson_scan_signs_inside_and_outside_the_window() {
        let f = FamilyDescriptor::poisson();
        let spec = ScanSpec::with_default_grid(f, vec![0.3, 0.7]).unwrap();
        let rows = scan(&spec).unwrap();
        assert!(
            rows[0].max_value > 0.0,
            "λ̂=0.3 should violate: {}",
            rows[0].max_value
        );
        assert!(
            rows[1].max_value <= 0.0,
            "λ̂=0.7 should hold: {}",
            rows[1].max_value
        );
    }

    #[test]
    fn gaussian_families_hold_inside_their_windows() {
        for f in [
            FamilyDescriptor::gaussian_known_var(1.0).unwrap(),
            FamilyDescriptor::gaussian_zero_mean_unknown_var(),
        ] {
            let spec = ScanSpec::with_default_grid(f, vec![0.45, 0.7, 0.9]).unwrap();
            let rows = scan(&spec).unwrap();
            assert!(
                rows[0].max_value > 0.0,
                "{}: λ̂=0.45 {}",
                f.name(),
                rows[0].max_value
            );
            assert!(
                rows[1].max_value <= 0.0,
                "{}: λ̂=0.7 {}",
                f.name(),
                rows[1].max_value
            );
            assert!(
                rows[2].max_value <= 0.0,
                "{}: λ̂=0.9 {}",
                f.name(),
                rows[2].max_value
            );
        }
    }

    #[test]
    fn vector_gaussian_default_grid_holds_at_high_lambda_hat() {
        let f = FamilyDescriptor::vector_gaussian();
        let spec = ScanSpec::with_default_grid(f, vec![0.8, 0.9]).unwrap();
        let rows = scan(&spec).unwrap();
        for row in &rows {
            assert!(
                row.max_value <= 0.0,
                "lambda_hat {}: max {} at {} / {}",
                row.lambda_hat,
                row.max_value,
                row.argmax.0 .0,
                row.argmax.1 .0
            );
        }
    }

    #[test]
    fn vector_gaussian_with_unequal_variances_can_violate_at_high_lambda_hat() {
        // the sign claim at lambda_hat = 0.8 is grid-dependent: a large mean
        // gap with strongly unequal variances flips it
        let f = FamilyDescriptor::vector_gaussian();
        let k1 = ExpectationParam(ParamVec::pair(0.0, 1.0)); // mean 0, var 1
        let k2 = ExpectationParam(ParamVec::pair(20.0, 421.0)); // mean 20, var 21
        let v = integral_form(&f, &k1, &k2, 0.8, 0.5).unwrap();
        assert!(v > 0.5, "expected a clear violation, got {v}");
    }

    #[test]
    fn scan_rejects_bad_specs() {
        let f = FamilyDescriptor::bernoulli();
        assert!(ScanSpec::with_default_grid(f, vec![]).is_err());
        let mut spec = ScanSpec::with_default_grid(f, vec![0.5]).unwrap();
        spec.lambda_hats = vec![1.5];
        assert!(scan(&spec).is_err());
        let k = ExpectationParam::scalar(0.5);
        let spec = ScanSpec {
            family: f,
            kappa_pairs: vec![(k, k)],
            lambda_hats: vec![0.5],
            ratio: 0.5,
        };
        assert!(scan(&spec).is_err());
    }

    #[test]
    fn csv_emission_shape() {
        let rows = vec![ScanRow {
            lambda_hat: 0.8,
            max_value: -0.5,
            argmax: (
                ExpectationParam::scalar(0.05),
                ExpectationParam::scalar(0.95),
            ),
        }];
        let csv = scan_to_csv(&rows);
        assert!(csv.starts_with("lambda_hat,max_value,argmax_kappa1,argmax_kappa2\n"));
        assert!(csv.contains("0.8,-0.5"));
    }
}
