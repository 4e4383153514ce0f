//! The sluggish modified-GLRT decision rule.
//!
//! At each step the rule (a) finishes a deterministic round-robin warm-up
//! until every arm has the per-family minimum number of samples, (b) finds
//! the hypothesis with the largest Z_i (ties broken uniformly at random),
//! (c) stops and declares it once Z exceeds `log((K−1)·L)`, and otherwise
//! (d) flips a Bernoulli(γ) coin: tails repeats the previous arm, heads
//! resamples the arm from the optimal weights λ* computed at the current
//! plug-in estimates. Small γ trades decision delay for fewer switches.

use rand::Rng;

use crate::complexity::{solve_lambda_star, ArmConfiguration};
use crate::expfam::{FamilyDescriptor, HyperParams, NaturalParam};
use crate::glr::RunState;
use crate::{Error, Result};

/// Which stopping rule variant to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyVariant {
    /// Stop at whichever hypothesis first exceeds the threshold.
    Standard,
    /// Stop only when the leading hypothesis is the given arm.
    StopOnlyAt(usize),
    /// Never stop (used for drift analysis).
    NeverStop,
}

impl PolicyVariant {
    fn permits_stop(&self, decision: usize) -> bool {
        match self {
            PolicyVariant::Standard => true,
            PolicyVariant::StopOnlyAt(i) => *i == decision,
            PolicyVariant::NeverStop => false,
        }
    }
}

/// Parameters of the decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// log L; the stopping threshold is log(K−1) + log L. Stored on the log
    /// scale so sweep grids like log L = 250 stay well-conditioned.
    pub log_l: f64,
    /// Switching parameter γ ∈ (0, 1]; γ = 1 resamples every step.
    pub gamma: f64,
    /// Conjugate-prior hyper-parameters used by the GLR.
    pub hyper: HyperParams,
    pub variant: PolicyVariant,
    /// Hard cap on episode length; the driver reports truncation.
    pub max_horizon: u64,
}

impl PolicyConfig {
    pub const DEFAULT_MAX_HORIZON: u64 = 10_000_000;

    /// Builds a config from log L (≥ 0, i.e. L ≥ 1) and γ ∈ (0, 1].
    pub fn new(log_l: f64, gamma: f64, hyper: HyperParams) -> Result<Self> {
        if !(log_l >= 0.0 && log_l.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "log L must be >= 0, got {log_l}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            log_l,
            gamma,
            hyper,
            variant: PolicyVariant::Standard,
            max_horizon: Self::DEFAULT_MAX_HORIZON,
        })
    }

    pub fn with_variant(mut self, variant: PolicyVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_max_horizon(mut self, max_horizon: u64) -> Self {
        self.max_horizon = max_horizon;
        self
    }

    /// Stopping threshold log((K−1)·L).
    pub fn threshold(&self, num_arms: usize) -> f64 {
        (num_arms as f64 - 1.0).ln() + self.log_l
    }
}

/// One action of the rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Continue { arm: usize },
    Stop { decision: usize },
}

/// A policy instance driving one episode.
///
/// Owns a small memo for the λ* solve: when the leading hypothesis and its
/// plug-in estimates are unchanged from the previous step the cached weights
/// are reused.
#[derive(Debug, Clone)]
pub struct Policy {
    cfg: PolicyConfig,
    weights_memo: Option<(usize, NaturalParam, NaturalParam, Vec<f64>)>,
}

impl Policy {
    pub fn new(cfg: PolicyConfig) -> Self {
        Self {
            cfg,
            weights_memo: None,
        }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    /// Chooses the next action given the current run state.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        state: &RunState,
        family: &FamilyDescriptor,
        rng: &mut R,
    ) -> Result<Action> {
        let k = state.num_arms();

        // (a) warm-up: round-robin until every hypothesis has ML estimates
        if let Some(arm) = state.first_underfilled(family.min_samples()) {
            return Ok(Action::Continue { arm });
        }

        // (b) leading hypothesis, uniform tie-break
        let report = state.report(family, &self.cfg.hyper)?;
        let leaders = report.leaders();
        let i_star = if leaders.len() == 1 {
            leaders[0]
        } else {
            leaders[rng.random_range(0..leaders.len())]
        };

        // (c) threshold crossing
        if report.z_min[i_star] >= self.cfg.threshold(k) && self.cfg.variant.permits_stop(i_star) {
            return Ok(Action::Stop { decision: i_star });
        }

        // (d) sluggish switch
        let explore = rng.random::<f64>() < self.cfg.gamma;
        if !explore {
            if let Some(last) = state.last_arm() {
                return Ok(Action::Continue { arm: last });
            }
        }

        let (k1, k2) = report.kappa_hat[i_star];
        let e1 = family.eta_of_kappa(&k1)?;
        let e2 = family.eta_of_kappa(&k2)?;
        let arm = match self.lambda_weights(i_star, e1, e2, family, k)? {
            Some(weights) => sample_categorical(&weights, rng),
            // degenerate plug-ins: no direction to guard, sample uniformly
            None => rng.random_range(0..k),
        };
        Ok(Action::Continue { arm })
    }

    /// λ* at the plug-in estimates, or `None` when they coincide (exactly or
    /// so nearly that the solver has no maximizing direction).
    fn lambda_weights(
        &mut self,
        i_star: usize,
        e1: NaturalParam,
        e2: NaturalParam,
        family: &FamilyDescriptor,
        k: usize,
    ) -> Result<Option<Vec<f64>>> {
        if e1 == e2 {
            return Ok(None);
        }
        if let Some((i, m1, m2, w)) = &self.weights_memo {
            if *i == i_star && *m1 == e1 && *m2 == e2 {
                return Ok(Some(w.clone()));
            }
        }
        let config = ArmConfiguration::new(i_star, e1, e2, k)?;
        match solve_lambda_star(family, &config) {
            Ok(res) => {
                self.weights_memo = Some((i_star, e1, e2, res.lambda_star.clone()));
                Ok(Some(res.lambda_star))
            }
            Err(Error::DegenerateConfiguration) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::{FamilyDescriptor, Observation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// RngCore stub emitting a constant word; `random::<f64>()` then yields
    /// a constant in [0,1).
    struct ConstRng(u64);

    impl rand::RngCore for ConstRng {
        fn next_u32(&mut self) -> u32 {
            self.0 as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for b in dest.iter_mut() {
                *b = 0;
            }
        }
    }

    fn bernoulli_setup() -> (FamilyDescriptor, RunState, PolicyConfig) {
        let f = FamilyDescriptor::bernoulli();
        let st = RunState::new(&f, 3);
        let cfg = PolicyConfig::new(5.0, 1.0, f.default_hyper()).unwrap();
        (f, st, cfg)
    }

    #[test]
    fn config_validation() {
        let h = FamilyDescriptor::bernoulli().default_hyper();
        assert!(PolicyConfig::new(-0.1, 1.0, h).is_err());
        assert!(PolicyConfig::new(1.0, 0.0, h).is_err());
        assert!(PolicyConfig::new(1.0, 1.1, h).is_err());
        assert!(PolicyConfig::new(0.0, 0.5, h).is_ok());
    }

    #[test]
    fn threshold_values() {
        let h = FamilyDescriptor::bernoulli().default_hyper();
        let cfg = PolicyConfig::new(50.0, 1.0, h).unwrap();
        assert!((cfg.threshold(8) - (50.0 + 7f64.ln())).abs() < 1e-12);
        let cfg = PolicyConfig::new(100f64.ln(), 1.0, h).unwrap();
        assert!((cfg.threshold(8) - 700f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn warm_up_is_round_robin() {
        let (f, mut st, cfg) = bernoulli_setup();
        let mut pol = Policy::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for expect in [0usize, 1, 2] {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Continue { arm } => {
                    assert_eq!(arm, expect);
                    st.update(arm, Observation(if arm == 0 { 1.0 } else { 0.0 }), &f)
                        .unwrap();
                }
                Action::Stop { .. } => panic!("must not stop during warm-up"),
            }
        }
        assert!(st.first_underfilled(f.min_samples()).is_none());
    }

    #[test]
    fn stops_once_threshold_is_exceeded() {
        let f = FamilyDescriptor::bernoulli();
        let mut st = RunState::new(&f, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // strongly separated data so Z grows fast; tiny threshold
        let cfg = PolicyConfig::new(0.0, 1.0, f.default_hyper()).unwrap();
        let mut pol = Policy::new(cfg);
        let mut stopped = None;
        for t in 0..2000 {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Stop { decision } => {
                    stopped = Some(decision);
                    break;
                }
                Action::Continue { arm } => {
                    let x = if arm == 0 {
                        // odd arm heavily biased to 1
                        if t % 10 == 0 {
                            0.0
                        } else {
                            1.0
                        }
                    } else if t % 10 == 1 {
                        1.0
                    } else {
                        0.0
                    };
                    st.update(arm, Observation(x), &f).unwrap();
                }
            }
        }
        assert_eq!(stopped, Some(0));
    }

    #[test]
    fn never_stop_variant_never_stops() {
        let f = FamilyDescriptor::bernoulli();
        let mut st = RunState::new(&f, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = PolicyConfig::new(0.0, 1.0, f.default_hyper())
            .unwrap()
            .with_variant(PolicyVariant::NeverStop);
        let mut pol = Policy::new(cfg);
        for t in 0..1000 {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Stop { .. } => panic!("NeverStop stopped"),
                Action::Continue { arm } => {
                    let x = if arm == 0 {
                        1.0
                    } else {
                        f64::from(u8::from(t % 7 == 0))
                    };
                    st.update(arm, Observation(x), &f).unwrap();
                }
            }
        }
    }

    #[test]
    fn stop_only_at_variant_stops_only_with_that_decision() {
        let f = FamilyDescriptor::bernoulli();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // data make arm 0 the clear odd arm; StopOnlyAt(1) must never stop,
        // StopOnlyAt(0) stops with decision 0
        for (target, expect_stop) in [(1usize, false), (0usize, true)] {
            let mut st = RunState::new(&f, 3);
            let cfg = PolicyConfig::new(0.0, 1.0, f.default_hyper())
                .unwrap()
                .with_variant(PolicyVariant::StopOnlyAt(target));
            let mut pol = Policy::new(cfg);
            let mut stopped = None;
            for t in 0..800 {
                match pol.step(&st, &f, &mut rng).unwrap() {
                    Action::Stop { decision } => {
                        stopped = Some(decision);
                        break;
                    }
                    Action::Continue { arm } => {
                        let x = if arm == 0 {
                            1.0
                        } else {
                            f64::from(u8::from(t % 9 == 0))
                        };
                        st.update(arm, Observation(x), &f).unwrap();
                    }
                }
            }
            if expect_stop {
                assert_eq!(stopped, Some(target));
            } else {
                assert_eq!(stopped, None);
            }
        }
    }

    #[test]
    fn forced_tails_repeat_the_last_arm() {
        // gamma = 0.1 with an all-zero U stream: below threshold the rule
        // repeats last_arm forever
        let f = FamilyDescriptor::bernoulli();
        let mut st = RunState::new(&f, 3);
        for (arm, x) in [
            (0usize, 1.0),
            (1, 0.0),
            (2, 0.0),
            (1, 1.0),
            (2, 1.0),
            (0, 0.0),
        ] {
            st.update(arm, Observation(x), &f).unwrap();
        }
        let cfg = PolicyConfig::new(500.0, 0.1, f.default_hyper()).unwrap();
        let mut pol = Policy::new(cfg);
        // ConstRng(0) => random::<f64>() == 0.0 < gamma, which means heads;
        // use a large constant word instead for tails.
        let mut rng = ConstRng(u64::MAX / 2); // uniform ~0.5 >= gamma=0.1 -> tails
        for _ in 0..50 {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Continue { arm } => assert_eq!(arm, st.last_arm().unwrap()),
                Action::Stop { .. } => panic!("below threshold"),
            }
        }
    }

    #[test]
    fn gamma_one_always_resamples_from_lambda_star() {
        // with gamma=1 the repeat branch is unreachable; over many steps the
        // policy must visit every arm (lambda* has full support)
        let f = FamilyDescriptor::bernoulli();
        let mut st = RunState::new(&f, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = PolicyConfig::new(1000.0, 1.0, f.default_hyper()).unwrap();
        let mut pol = Policy::new(cfg);
        for t in 0..400 {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Continue { arm } => {
                    let odd = arm == 1;
                    let x = f64::from(u8::from(if odd { t % 5 != 0 } else { t % 5 == 0 }));
                    st.update(arm, Observation(x), &f).unwrap();
                }
                Action::Stop { .. } => panic!("threshold unreachable"),
            }
        }
        for arm in 0..3 {
            assert!(
                st.pulls(arm) > 10,
                "arm {arm} pulled {} times",
                st.pulls(arm)
            );
        }
    }

    #[test]
    fn identical_arm_data_falls_back_to_uniform_sampling() {
        // identical per-arm data: every hypothesis ties and the plug-in
        // estimates coincide exactly, so there is no direction to guard;
        // the rule keeps sampling (uniformly) instead of erroring
        let f = FamilyDescriptor::poisson();
        let mut st = RunState::new(&f, 3);
        for arm in 0..3 {
            st.update(arm, Observation(2.0), &f).unwrap();
            st.update(arm, Observation(4.0), &f).unwrap();
        }
        let cfg = PolicyConfig::new(100.0, 1.0, f.default_hyper()).unwrap();
        let mut pol = Policy::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = [false; 3];
        for _ in 0..200 {
            match pol.step(&st, &f, &mut rng).unwrap() {
                Action::Continue { arm } => seen[arm] = true,
                Action::Stop { .. } => panic!("threshold unreachable"),
            }
        }
        assert!(
            seen.iter().all(|s| *s),
            "uniform fallback must reach every arm"
        );
    }

    #[test]
    fn identical_seeds_give_identical_action_sequences() {
        let f = FamilyDescriptor::poisson();
        let run = |seed: u64| {
            let mut st = RunState::new(&f, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = PolicyConfig::new(3.0, 0.5, f.default_hyper()).unwrap();
            let mut pol = Policy::new(cfg);
            let mut actions = Vec::new();
            for _ in 0..300 {
                let a = pol.step(&st, &f, &mut rng).unwrap();
                actions.push(a);
                match a {
                    Action::Stop { .. } => break,
                    Action::Continue { arm } => {
                        let eta = if arm == 0 {
                            crate::expfam::NaturalParam::scalar(1.0)
                        } else {
                            crate::expfam::NaturalParam::scalar(0.0)
                        };
                        let x = f.sample(&eta, &mut rng).unwrap();
                        st.update(arm, x, &f).unwrap();
                    }
                }
            }
            actions
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
