//! Run statistics and the modified GLR.
//!
//! A [`RunState`] accumulates, per arm, the pull count `N_j` and the summed
//! sufficient statistic `Y_j`. The modified GLR of hypothesis `i` against
//! alternative `j` is
//!
//! ```text
//! Z_ij = logNorm(Y_i + τ, N_i + n₀) + logNorm(Y − Y_i + τ, n − N_i + n₀)
//!        − 2 logNorm(τ, n₀) − N_j F(κ̂₁(j)) − (n − N_j) F(κ̂₂(j))
//! ```
//!
//! where `logNorm` is the conjugate-prior log-normalizer and the maximum
//! likelihood of the data under hypothesis `j` is expressed through the dual
//! as `N·F(κ̂)` (identical to `η̂ᵀY − N·A(η̂)` by the Fenchel identity, and one
//! duality map cheaper). `Z_i = min_{j≠i} Z_ij` is the evidence for `i`
//! against its nearest alternative.

use std::io::Write;

use crate::expfam::{ExpectationParam, FamilyDescriptor, HyperParams, Observation, ParamVec};
use crate::{Error, Result};

/// Sufficient-statistic accumulators for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    step: u64,
    pulls: Vec<u64>,
    stat_sums: Vec<ParamVec>,
    stat_total: ParamVec,
    last_arm: Option<usize>,
}

impl RunState {
    pub fn new(family: &FamilyDescriptor, num_arms: usize) -> Self {
        Self {
            step: 0,
            pulls: vec![0; num_arms],
            stat_sums: vec![ParamVec::zeros(family.dim()); num_arms],
            stat_total: ParamVec::zeros(family.dim()),
            last_arm: None,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.pulls.len()
    }

    /// Total number of observations n.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Pull count N_j.
    pub fn pulls(&self, arm: usize) -> u64 {
        self.pulls[arm]
    }

    /// Per-arm sufficient-statistic sum Y_j.
    pub fn stat_sum(&self, arm: usize) -> &ParamVec {
        &self.stat_sums[arm]
    }

    /// Total sufficient-statistic sum Yⁿ.
    pub fn stat_total(&self) -> &ParamVec {
        &self.stat_total
    }

    pub fn last_arm(&self) -> Option<usize> {
        self.last_arm
    }

    /// Lowest-index arm that still has fewer than `need` pulls.
    pub fn first_underfilled(&self, need: u64) -> Option<usize> {
        self.pulls.iter().position(|&n| n < need)
    }

    /// Records one observation from `arm`.
    pub fn update(
        &mut self,
        arm: usize,
        obs: Observation,
        family: &FamilyDescriptor,
    ) -> Result<()> {
        if arm >= self.pulls.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                num_arms: self.pulls.len(),
            });
        }
        let t = family.sufficient_stat(obs)?;
        self.step += 1;
        self.pulls[arm] += 1;
        self.stat_sums[arm].add_assign(&t);
        self.stat_total.add_assign(&t);
        self.last_arm = Some(arm);
        Ok(())
    }

    /// ML estimates (κ̂₁(j), κ̂₂(j)) under hypothesis `j`: the odd-arm
    /// estimate is the sample mean of arm `j`'s statistic, the non-odd one
    /// pools every other arm. Both are clamped to the domain interior.
    ///
    /// Errors with [`Error::NotReady`] until both sides have the per-family
    /// minimum number of samples.
    pub fn ml_estimates(
        &self,
        j: usize,
        family: &FamilyDescriptor,
    ) -> Result<(ExpectationParam, ExpectationParam)> {
        if j >= self.pulls.len() {
            return Err(Error::ArmOutOfRange {
                arm: j,
                num_arms: self.pulls.len(),
            });
        }
        let need = family.min_samples();
        let n_j = self.pulls[j];
        let rest = self.step - n_j;
        if n_j < need {
            return Err(Error::NotReady {
                hypothesis: j,
                have: n_j,
                need,
            });
        }
        if rest < need {
            return Err(Error::NotReady {
                hypothesis: j,
                have: rest,
                need,
            });
        }
        let odd = ExpectationParam(self.stat_sums[j].scale(1.0 / n_j as f64));
        let pooled = ExpectationParam(
            self.stat_total
                .sub(&self.stat_sums[j])
                .scale(1.0 / rest as f64),
        );
        Ok((
            family.clamp_to_interior(odd),
            family.clamp_to_interior(pooled),
        ))
    }

    /// The modified GLR Z_ij of hypothesis `i` against alternative `j`.
    pub fn glr_statistic(
        &self,
        i: usize,
        j: usize,
        family: &FamilyDescriptor,
        hyper: &HyperParams,
    ) -> Result<f64> {
        let (k1, k2) = self.ml_estimates(j, family)?;
        let num = self.averaged_log_likelihood(i, family, hyper)?;
        let n_j = self.pulls[j] as f64;
        let rest = (self.step - self.pulls[j]) as f64;
        let den = n_j * family.dual(&k1)? + rest * family.dual(&k2)?;
        Ok(num - den)
    }

    /// Log of the prior-averaged likelihood under hypothesis `i`, up to the
    /// h(x) factors shared with the ML term.
    fn averaged_log_likelihood(
        &self,
        i: usize,
        family: &FamilyDescriptor,
        hyper: &HyperParams,
    ) -> Result<f64> {
        if i >= self.pulls.len() {
            return Err(Error::ArmOutOfRange {
                arm: i,
                num_arms: self.pulls.len(),
            });
        }
        let base = family.log_prior_normalizer(hyper)?;
        let odd = HyperParams::new(
            self.stat_sums[i].add(&hyper.tau),
            self.pulls[i] as f64 + hyper.n0,
        );
        let pooled = HyperParams::new(
            self.stat_total.sub(&self.stat_sums[i]).add(&hyper.tau),
            (self.step - self.pulls[i]) as f64 + hyper.n0,
        );
        Ok(family.log_prior_normalizer(&odd)? + family.log_prior_normalizer(&pooled)? - 2.0 * base)
    }

    /// Full GLR snapshot: the Z matrix, the per-hypothesis minima, and the
    /// leading hypothesis.
    pub fn report(&self, family: &FamilyDescriptor, hyper: &HyperParams) -> Result<GlrReport> {
        let k = self.pulls.len();
        let mut kappa_hat = Vec::with_capacity(k);
        let mut duals = Vec::with_capacity(k);
        let mut averaged = Vec::with_capacity(k);
        for j in 0..k {
            let (k1, k2) = self.ml_estimates(j, family)?;
            let n_j = self.pulls[j] as f64;
            let rest = (self.step - self.pulls[j]) as f64;
            duals.push(n_j * family.dual(&k1)? + rest * family.dual(&k2)?);
            averaged.push(self.averaged_log_likelihood(j, family, hyper)?);
            kappa_hat.push((k1, k2));
        }

        let mut z = vec![vec![f64::NAN; k]; k];
        let mut z_min = vec![f64::INFINITY; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let zij = averaged[i] - duals[j];
                z[i][j] = zij;
                if zij < z_min[i] {
                    z_min[i] = zij;
                }
            }
        }
        let i_star = z_min
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("at least one arm");
        Ok(GlrReport {
            z,
            z_min,
            i_star,
            kappa_hat,
        })
    }
}

/// Immutable GLR snapshot at one step.
#[derive(Debug, Clone)]
pub struct GlrReport {
    /// Z\[i\]\[j\]; the diagonal is unused (NaN).
    pub z: Vec<Vec<f64>>,
    /// Z_i = min_{j≠i} Z_ij.
    pub z_min: Vec<f64>,
    /// Smallest index attaining max_i Z_i; see [`GlrReport::leaders`] for
    /// the full tie set.
    pub i_star: usize,
    /// Clamped ML estimate pair (κ̂₁(j), κ̂₂(j)) per hypothesis.
    pub kappa_hat: Vec<(ExpectationParam, ExpectationParam)>,
}

impl GlrReport {
    /// All hypotheses attaining the maximum of Z_i (callers break ties).
    pub fn leaders(&self) -> Vec<usize> {
        let best = self.z_min[self.i_star];
        self.z_min
            .iter()
            .enumerate()
            .filter(|(_, z)| **z == best)
            .map(|(i, _)| i)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Trace dump
// ---------------------------------------------------------------------------

/// Writes the delimited-text trace header: step, arm, observation, per-arm
/// pull counts and statistic sums, then the row-major Z matrix.
pub fn write_trace_header<W: Write + ?Sized>(
    out: &mut W,
    family: &FamilyDescriptor,
    num_arms: usize,
) -> Result<()> {
    let mut cols = vec!["step".to_string(), "arm".to_string(), "obs".to_string()];
    for j in 1..=num_arms {
        cols.push(format!("N_{j}"));
    }
    for j in 1..=num_arms {
        for d in 1..=family.dim() {
            cols.push(format!("Y_{j}_{d}"));
        }
    }
    for i in 1..=num_arms {
        for j in 1..=num_arms {
            cols.push(format!("Z_{i}_{j}"));
        }
    }
    writeln!(out, "{}", cols.join(","))?;
    Ok(())
}

/// Writes one trace record for the state reached after `update(arm, obs)`.
/// Z entries are NaN while any hypothesis is not yet ready.
pub fn write_trace_record<W: Write + ?Sized>(
    out: &mut W,
    state: &RunState,
    arm: usize,
    obs: Observation,
    family: &FamilyDescriptor,
    hyper: &HyperParams,
) -> Result<()> {
    let k = state.num_arms();
    let mut cols = vec![
        state.step_count().to_string(),
        (arm + 1).to_string(),
        format!("{}", obs.0),
    ];
    for j in 0..k {
        cols.push(state.pulls(j).to_string());
    }
    for j in 0..k {
        for d in 0..family.dim() {
            cols.push(format!("{}", state.stat_sum(j).get(d)));
        }
    }
    match state.report(family, hyper) {
        Ok(report) => {
            for i in 0..k {
                for j in 0..k {
                    cols.push(format!("{}", report.z[i][j]));
                }
            }
        }
        Err(Error::NotReady { .. }) => {
            cols.extend(std::iter::repeat_n("NaN".to_string(), k * k));
        }
        Err(e) => return Err(e),
    }
    writeln!(out, "{}", cols.join(","))?;
    Ok(())
}
