//! Experiment configuration: structured-text files, flag overrides, and the
//! four built-in figure presets.

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use oddarm::complexity::ArmConfiguration;
use oddarm::expfam::{ExpectationParam, FamilyDescriptor, HyperParams, NaturalParam, ParamVec};
use oddarm::policy::PolicyConfig;

/// Fully resolved experiment setup shared by the subcommands.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub family: FamilyDescriptor,
    pub psi: ArmConfiguration,
    pub hyper: HyperParams,
    pub max_horizon: u64,
    /// Echoed configuration lines (metadata block).
    pub echo: Vec<String>,
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub arms: ArmsSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scan: ScanSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub kind: Option<String>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsSection {
    pub k: Option<usize>,
    /// 1-based odd arm index.
    pub odd_index: Option<usize>,
    pub kappa1: Option<Vec<f64>>,
    pub kappa2: Option<Vec<f64>>,
    pub eta1: Option<Vec<f64>>,
    pub eta2: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub gammas: Option<Vec<f64>>,
    pub log_l: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub n0: Option<f64>,
    pub max_horizon: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    pub switch_cost: Option<f64>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub lambda_hats: Option<Vec<f64>>,
    pub r: Option<f64>,
    /// Scalar-family grid points.
    pub points: Option<Vec<f64>>,
    /// Vector-Gaussian mean grid (pairs share one variance from `variances`).
    pub means: Option<Vec<f64>>,
    pub variances: Option<Vec<f64>>,
}

pub fn load_file(path: &str) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    // toml errors carry line/column spans
    toml::from_str(&text).map_err(|e| anyhow!("{path}: {e}"))
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// Raw experiment inputs after merging file and flags (flags win).
#[derive(Debug, Default, Clone)]
pub struct RawExperiment {
    pub figure: Option<u8>,
    pub family: Option<String>,
    pub sigma: Option<f64>,
    pub k: Option<usize>,
    pub odd_index: Option<usize>,
    pub kappa1: Option<Vec<f64>>,
    pub kappa2: Option<Vec<f64>>,
    pub eta1: Option<Vec<f64>>,
    pub eta2: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub n0: Option<f64>,
    pub max_horizon: Option<u64>,
}

impl RawExperiment {
    pub fn merge_file(&mut self, file: &FileConfig) {
        let f = self;
        f.family = f.family.take().or_else(|| file.family.kind.clone());
        f.sigma = f.sigma.or(file.family.sigma);
        f.k = f.k.or(file.arms.k);
        f.odd_index = f.odd_index.or(file.arms.odd_index);
        f.kappa1 = f.kappa1.take().or_else(|| file.arms.kappa1.clone());
        f.kappa2 = f.kappa2.take().or_else(|| file.arms.kappa2.clone());
        f.eta1 = f.eta1.take().or_else(|| file.arms.eta1.clone());
        f.eta2 = f.eta2.take().or_else(|| file.arms.eta2.clone());
        f.tau = f.tau.take().or_else(|| file.policy.tau.clone());
        f.n0 = f.n0.or(file.policy.n0);
        f.max_horizon = f.max_horizon.or(file.policy.max_horizon);
    }

    pub fn resolve(mut self) -> anyhow::Result<Experiment> {
        let mut echo = Vec::new();
        if let Some(figure) = self.figure {
            let preset = figure_preset(figure)?;
            echo.push(format!("figure = {figure}"));
            echo.extend(preset.echo.iter().cloned());
            self.family = self.family.or(Some(preset.family_name.to_string()));
            self.sigma = self.sigma.or(preset.sigma);
            self.k = self.k.or(Some(8));
            self.kappa1 = self.kappa1.or_else(|| Some(preset.kappa1.clone()));
            self.kappa2 = self.kappa2.or_else(|| Some(preset.kappa2.clone()));
        }

        let family = build_family(
            self.family
                .as_deref()
                .ok_or_else(|| anyhow!("no family given"))?,
            self.sigma,
        )?;
        if self.figure.is_none() {
            echo.push(format!("family = {}", family.name()));
        }

        let k = self.k.unwrap_or(8);
        let odd_1based = self.odd_index.unwrap_or(1);
        if odd_1based == 0 || odd_1based > k {
            bail!("odd_index must lie in 1..={k}, got {odd_1based}");
        }

        let eta1 = resolve_param(&family, self.eta1.as_deref(), self.kappa1.as_deref(), "1")?;
        let eta2 = resolve_param(&family, self.eta2.as_deref(), self.kappa2.as_deref(), "2")?;
        let psi = ArmConfiguration::new(odd_1based - 1, eta1, eta2, k)?;

        let hyper = match (self.tau, self.n0) {
            (None, None) => family.default_hyper(),
            (tau, n0) => {
                let default = family.default_hyper();
                let tau = tau.map(|v| ParamVec::from_slice(&v)).unwrap_or(default.tau);
                HyperParams::new(tau, n0.unwrap_or(default.n0))
            }
        };
        family.check_hyper(&hyper)?;

        if self.figure.is_none() {
            let k1 = family.kappa_of_eta(&eta1)?;
            let k2 = family.kappa_of_eta(&eta2)?;
            echo.push(format!("kappa1 = {k1}"));
            echo.push(format!("kappa2 = {k2}"));
            echo.push(format!("K = {k}"));
        }
        echo.push(format!("odd_index = {odd_1based}"));
        echo.push(format!("tau = {}", hyper.tau));
        echo.push(format!("n0 = {}", hyper.n0));

        Ok(Experiment {
            family,
            psi,
            hyper,
            max_horizon: self
                .max_horizon
                .unwrap_or(PolicyConfig::DEFAULT_MAX_HORIZON),
            echo,
        })
    }
}

fn resolve_param(
    family: &FamilyDescriptor,
    eta: Option<&[f64]>,
    kappa: Option<&[f64]>,
    which: &str,
) -> anyhow::Result<NaturalParam> {
    let check_dim = |v: &[f64]| -> anyhow::Result<()> {
        if v.len() != family.dim() {
            bail!(
                "parameter {which} must have {} component(s) for {}, got {}",
                family.dim(),
                family.name(),
                v.len()
            );
        }
        Ok(())
    };
    match (eta, kappa) {
        (Some(e), _) => {
            check_dim(e)?;
            let eta = NaturalParam(ParamVec::from_slice(e));
            family.check_natural(&eta)?;
            Ok(eta)
        }
        (None, Some(kv)) => {
            check_dim(kv)?;
            let kappa = ExpectationParam(ParamVec::from_slice(kv));
            Ok(family.eta_of_kappa(&kappa)?)
        }
        (None, None) => bail!("arm parameter {which} missing: give eta{which} or kappa{which}"),
    }
}

pub fn build_family(name: &str, sigma: Option<f64>) -> anyhow::Result<FamilyDescriptor> {
    match name {
        "poisson" => Ok(FamilyDescriptor::poisson()),
        "bernoulli" => Ok(FamilyDescriptor::bernoulli()),
        "gaussian-mean" => Ok(FamilyDescriptor::gaussian_known_var(sigma.unwrap_or(1.0))?),
        "gaussian-variance" => Ok(FamilyDescriptor::gaussian_zero_mean_unknown_var()),
        "vector-gaussian" => Ok(FamilyDescriptor::vector_gaussian()),
        other => bail!(
            "unknown family '{other}' (expected poisson, bernoulli, gaussian-mean, \
             gaussian-variance, or vector-gaussian)"
        ),
    }
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

pub struct FigurePreset {
    pub family_name: &'static str,
    pub sigma: Option<f64>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    /// Caption parameters, echoed verbatim.
    pub echo: Vec<String>,
}

/// The four stopping-time experiment presets. Echo lines repeat the source
/// parameters byte for byte.
pub fn figure_preset(figure: u8) -> anyhow::Result<FigurePreset> {
    let lines = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match figure {
        1 => Ok(FigurePreset {
            family_name: "gaussian-mean",
            sigma: Some(1.0),
            kappa1: vec![0.0],
            kappa2: vec![1.0],
            echo: lines(&[
                "family = gaussian-mean",
                "mu1 = 0",
                "sigma1^2 = 1",
                "mu2 = 1",
                "sigma2^2 = 1",
                "K = 8",
            ]),
        }),
        2 => Ok(FigurePreset {
            family_name: "gaussian-variance",
            sigma: None,
            kappa1: vec![25.0],
            kappa2: vec![1.0],
            echo: lines(&[
                "family = gaussian-variance",
                "mu1 = 0",
                "sigma1^2 = 25",
                "mu2 = 0",
                "sigma2^2 = 1",
                "K = 8",
            ]),
        }),
        3 => Ok(FigurePreset {
            family_name: "bernoulli",
            sigma: None,
            kappa1: vec![0.1],
            kappa2: vec![0.8],
            echo: lines(&["family = bernoulli", "p1 = 0.1", "p2 = 0.8", "K = 8"]),
        }),
        4 => Ok(FigurePreset {
            family_name: "vector-gaussian",
            sigma: None,
            kappa1: vec![0.0, 2.0],
            kappa2: vec![4.0, 21.0],
            echo: lines(&[
                "family = vector-gaussian",
                "mu1 = 0",
                "sigma1^2 = 2",
                "mu2 = 4",
                "sigma2^2 = 5",
                "K = 8",
            ]),
        }),
        other => bail!("unknown figure {other} (expected 1, 2, 3, or 4)"),
    }
}

/// Comma-separated float list flag value (e.g. `--logL 0,50,100`).
#[derive(Debug, Clone)]
pub struct FloatList(pub Vec<f64>);

impl std::str::FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("'{tok}': {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}
