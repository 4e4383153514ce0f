//! Episode driver, switching-cost accounting, and Monte-Carlo sweeps.
//!
//! Episodes are fully determined by a 64-bit seed; batch runners derive
//! per-episode seeds from a stable mix of (master seed, configuration
//! fingerprint, episode index) so results are order-independent under
//! parallel execution and reproducible from the master seed alone.

use std::io::Write;

use rayon::prelude::*;

use crate::complexity::{lower_bound_asymptote, solve_lambda_star, ArmConfiguration};
use crate::expfam::FamilyDescriptor;
use crate::glr::{write_trace_header, write_trace_record, RunState};
use crate::policy::{Action, Policy, PolicyConfig, PolicyVariant};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-pair switching costs g(a, a′) with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCostMatrix {
    g: Vec<Vec<f64>>,
    g_max: f64,
}

impl SwitchCostMatrix {
    /// No switching costs.
    pub fn zero(num_arms: usize) -> Self {
        Self {
            g: vec![vec![0.0; num_arms]; num_arms],
            g_max: 0.0,
        }
    }

    /// Constant cost for every actual switch.
    pub fn uniform(num_arms: usize, cost: f64) -> Result<Self> {
        if !(cost >= 0.0 && cost.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "switch cost must be >= 0, got {cost}"
            )));
        }
        let mut g = vec![vec![cost; num_arms]; num_arms];
        for (a, row) in g.iter_mut().enumerate() {
            row[a] = 0.0;
        }
        Ok(Self { g, g_max: cost })
    }

    /// Arbitrary nonnegative matrix; the diagonal must be zero.
    pub fn from_matrix(g: Vec<Vec<f64>>) -> Result<Self> {
        let k = g.len();
        let mut g_max = 0.0f64;
        for (a, row) in g.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidConfig(
                    "switch cost matrix must be square".into(),
                ));
            }
            for (b, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "switch cost g({a},{b}) must be >= 0 and finite, got {v}"
                    )));
                }
                if a == b && v != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "switch cost g({a},{a}) must be zero, got {v}"
                    )));
                }
                g_max = g_max.max(v);
            }
        }
        Ok(Self { g, g_max })
    }

    pub fn num_arms(&self) -> usize {
        self.g.len()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.g[from][to]
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }
}

/// Outcome of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    /// Number of observations taken before stopping (or truncation).
    pub stopping_time: u64,
    /// Declared odd arm; `None` when the horizon cap was hit.
    pub decision: Option<usize>,
    pub correct: bool,
    /// Number of consecutive-pull arm changes.
    pub switches: u64,
    /// Accumulated g(A_l, A_{l+1}).
    pub switch_cost: f64,
    /// stopping_time + switch_cost.
    pub total_cost: f64,
}

/// Aggregates of one Monte-Carlo batch at a single (log L, γ) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    pub mean_tau: f64,
    pub mean_cost: f64,
    pub error_rate: f64,
    pub mean_switches: f64,
    pub truncated: u32,
    pub runs: u32,
}

/// One sweep table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub log_l: f64,
    pub gamma: f64,
    pub mean_tau: f64,
    pub mean_cost: f64,
    pub error_rate: f64,
    pub mean_switches: f64,
    pub lower_bound: f64,
    pub runs: u32,
    pub seed: u64,
}

/// Full factorial sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub d_star: f64,
    pub master_seed: u64,
    pub config_fingerprint: u64,
}

impl SweepResult {
    /// Pinned delimited-text header.
    pub const CSV_HEADER: &'static str =
        "log_L,gamma,mean_tau,mean_cost,error_rate,lower_bound,runs,seed";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format_csv_row(row));
            out.push('\n');
        }
        out
    }
}

pub fn format_csv_row(row: &SweepRow) -> String {
    format!(
        "{},{},{:.4},{:.4},{:.4},{:.4},{},{}",
        row.log_l,
        row.gamma,
        row.mean_tau,
        row.mean_cost,
        row.error_rate,
        row.lower_bound,
        row.runs,
        row.seed
    )
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn fnv1a_f64(h: u64, v: f64) -> u64 {
    fnv1a(h, &v.to_bits().to_le_bytes())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Stable fingerprint of (family, configuration, policy parameters), used to
/// decorrelate episode seeds across sweep cells.
pub fn config_fingerprint(
    family: &FamilyDescriptor,
    psi: &ArmConfiguration,
    cfg: &PolicyConfig,
) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, family.name().as_bytes());
    if let crate::expfam::FamilyKind::GaussianKnownVar { sigma } = family.kind() {
        h = fnv1a_f64(h, sigma);
    }
    h = fnv1a(h, &(psi.odd_index as u64).to_le_bytes());
    h = fnv1a(h, &(psi.num_arms as u64).to_le_bytes());
    for v in psi.eta_odd.0.as_slice() {
        h = fnv1a_f64(h, *v);
    }
    for v in psi.eta_common.0.as_slice() {
        h = fnv1a_f64(h, *v);
    }
    h = fnv1a_f64(h, cfg.log_l);
    h = fnv1a_f64(h, cfg.gamma);
    for v in cfg.hyper.tau.as_slice() {
        h = fnv1a_f64(h, *v);
    }
    h = fnv1a_f64(h, cfg.hyper.n0);
    let variant_tag: u64 = match cfg.variant {
        PolicyVariant::Standard => 0,
        PolicyVariant::StopOnlyAt(i) => 1 + i as u64,
        PolicyVariant::NeverStop => u64::MAX,
    };
    h = fnv1a(h, &variant_tag.to_le_bytes());
    h = fnv1a(h, &cfg.max_horizon.to_le_bytes());
    h
}

/// Per-episode seed: a stable mix of master seed, configuration fingerprint,
/// and episode index.
pub fn episode_seed(master_seed: u64, fingerprint: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(fingerprint ^ splitmix64(index)))
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

/// Runs one seeded episode.
pub fn run_episode(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    cfg: &PolicyConfig,
    costs: &SwitchCostMatrix,
    seed: u64,
) -> Result<EpisodeResult> {
    run_episode_impl(psi, family, cfg, costs, seed, None)
}

/// Runs one seeded episode and dumps the per-step trace (the delimited
/// format from [`crate::glr`]) into `trace`.
pub fn run_episode_traced<W: Write>(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    cfg: &PolicyConfig,
    costs: &SwitchCostMatrix,
    seed: u64,
    trace: &mut W,
) -> Result<EpisodeResult> {
    run_episode_impl(psi, family, cfg, costs, seed, Some(trace))
}

fn run_episode_impl(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    cfg: &PolicyConfig,
    costs: &SwitchCostMatrix,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<EpisodeResult> {
    if costs.num_arms() != psi.num_arms {
        return Err(Error::InvalidConfig(format!(
            "switch cost matrix is {}x{} but the configuration has {} arms",
            costs.num_arms(),
            costs.num_arms(),
            psi.num_arms
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RunState::new(family, psi.num_arms);
    let mut policy = Policy::new(cfg.clone());
    let mut switches = 0u64;
    let mut switch_cost = 0.0f64;

    if let Some(out) = trace.as_deref_mut() {
        write_trace_header(out, family, psi.num_arms)?;
    }

    loop {
        match policy.step(&state, family, &mut rng)? {
            Action::Stop { decision } => {
                let tau = state.step_count();
                return Ok(EpisodeResult {
                    stopping_time: tau,
                    decision: Some(decision),
                    correct: decision == psi.odd_index,
                    switches,
                    switch_cost,
                    total_cost: tau as f64 + switch_cost,
                });
            }
            Action::Continue { arm } => {
                if let Some(prev) = state.last_arm() {
                    if prev != arm {
                        switches += 1;
                        switch_cost += costs.get(prev, arm);
                    }
                }
                let x = family.sample(&psi.arm_eta(arm), &mut rng)?;
                state.update(arm, x, family)?;
                if let Some(out) = trace.as_deref_mut() {
                    write_trace_record(out, &state, arm, x, family, &cfg.hyper)?;
                }
                if state.step_count() >= cfg.max_horizon {
                    let tau = state.step_count();
                    return Ok(EpisodeResult {
                        stopping_time: tau,
                        decision: None,
                        correct: false,
                        switches,
                        switch_cost,
                        total_cost: tau as f64 + switch_cost,
                    });
                }
            }
        }
    }
}

/// Runs `runs` independent episodes in parallel and aggregates them.
pub fn run_batch(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    cfg: &PolicyConfig,
    costs: &SwitchCostMatrix,
    runs: u32,
    master_seed: u64,
) -> Result<BatchStats> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    let fp = config_fingerprint(family, psi, cfg);
    let episodes: Vec<EpisodeResult> = (0..runs as u64)
        .into_par_iter()
        .map(|i| run_episode(psi, family, cfg, costs, episode_seed(master_seed, fp, i)))
        .collect::<Result<_>>()?;

    let n = runs as f64;
    let mean_tau = episodes.iter().map(|e| e.stopping_time as f64).sum::<f64>() / n;
    let mean_cost = episodes.iter().map(|e| e.total_cost).sum::<f64>() / n;
    let errors = episodes.iter().filter(|e| !e.correct).count() as f64;
    let mean_switches = episodes.iter().map(|e| e.switches as f64).sum::<f64>() / n;
    let truncated = episodes.iter().filter(|e| e.decision.is_none()).count() as u32;
    Ok(BatchStats {
        mean_tau,
        mean_cost,
        error_rate: errors / n,
        mean_switches,
        truncated,
        runs,
    })
}

/// Full factorial sweep over `gammas` × `log_l_grid`, with the idealized
/// lower-bound asymptote log(L)/D* attached to every row.
///
/// `base` supplies the hyper-parameters, variant, and horizon; its `log_l`
/// and `gamma` are replaced cell by cell.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    base: &PolicyConfig,
    gammas: &[f64],
    log_l_grid: &[f64],
    costs: &SwitchCostMatrix,
    runs: u32,
    master_seed: u64,
) -> Result<SweepResult> {
    if gammas.is_empty() || log_l_grid.is_empty() {
        return Err(Error::InvalidConfig(
            "gamma and log L grids must be nonempty".into(),
        ));
    }
    let d_star = solve_lambda_star(family, psi)?.d_star;
    let mut rows = Vec::with_capacity(gammas.len() * log_l_grid.len());
    for &gamma in gammas {
        for &log_l in log_l_grid {
            let mut cfg =
                PolicyConfig::new(log_l, gamma, base.hyper)?.with_max_horizon(base.max_horizon);
            cfg.variant = base.variant;
            let stats = run_batch(psi, family, &cfg, costs, runs, master_seed)?;
            rows.push(SweepRow {
                log_l,
                gamma,
                mean_tau: stats.mean_tau,
                mean_cost: stats.mean_cost,
                error_rate: stats.error_rate,
                mean_switches: stats.mean_switches,
                lower_bound: lower_bound_asymptote(log_l, d_star),
                runs,
                seed: master_seed,
            });
        }
    }
    let fp = config_fingerprint(family, psi, base);
    Ok(SweepResult {
        rows,
        d_star,
        master_seed,
        config_fingerprint: fp,
    })
}

/// Average drift Z_i(n)/n of the true odd arm's statistic under the
/// non-stopping policy, after `n_steps` observations.
pub fn drift_check(
    psi: &ArmConfiguration,
    family: &FamilyDescriptor,
    cfg: &PolicyConfig,
    n_steps: u64,
    seed: u64,
) -> Result<f64> {
    if n_steps < 10 * psi.num_arms as u64 {
        return Err(Error::InvalidConfig(format!(
            "drift check needs at least {} steps, got {n_steps}",
            10 * psi.num_arms
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RunState::new(family, psi.num_arms);
    let nonstop = PolicyConfig {
        log_l: cfg.log_l,
        gamma: cfg.gamma,
        hyper: cfg.hyper,
        variant: PolicyVariant::NeverStop,
        max_horizon: cfg.max_horizon,
    };
    let mut policy = Policy::new(nonstop);
    while state.step_count() < n_steps {
        match policy.step(&state, family, &mut rng)? {
            Action::Continue { arm } => {
                let x = family.sample(&psi.arm_eta(arm), &mut rng)?;
                state.update(arm, x, family)?;
            }
            Action::Stop { .. } => unreachable!("drift check runs the non-stopping variant"),
        }
    }
    let report = state.report(family, &cfg.hyper)?;
    Ok(report.z_min[psi.odd_index] / n_steps as f64)
}
