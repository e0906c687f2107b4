//! Monte Carlo checks of the bounds.
//!
//! Every trial draws from its own ChaCha8 stream, selected by the trial index
//! under a master seed, so results do not depend on how trials are scheduled
//! across threads.

pub mod attack;
pub mod path;
pub mod reduced;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfirmationDepth, ProtocolParams};

pub use attack::{run_private_mining_attack, AttackOutcome, HaltReason, RaceTrace};
pub use path::{generate_sample_path, ArrivalGap, Block, Role, SamplePath};
pub use reduced::{sample_max_reach, sample_reduced_trial, sample_stationary_lead, ReducedTrial};

/// Success count with a three-sigma binomial half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub ci_halfwidth_3sigma: f64,
}

impl Estimate {
    pub fn from_counts(trials: u64, successes: u64) -> Self {
        let point = successes as f64 / trials as f64;
        Self {
            trials,
            successes,
            point,
            ci_halfwidth_3sigma: 3.0 * (point * (1.0 - point) / trials as f64).sqrt(),
        }
    }

    /// `|point - value| <= 3 sigma`, with sigma taken at `value` so that a
    /// zero-success estimate of a tiny probability is still judged fairly.
    pub fn within_3sigma_of(&self, value: f64) -> bool {
        let sigma = (value * (1.0 - value) / self.trials as f64).sqrt();
        (self.point - value).abs() <= 3.0 * sigma
    }
}

/// Which event the reduced sampler counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// Rigged model: honest probability `p = rho e^(-lambda delta)`, event
    /// `2L + 2B + M >= 2k - 1`.
    RiggedUpper,
    /// Zero delay: honest probability `rho`, event `2L + 2B + M >= 2k`.
    Delta0Exact,
}

/// The RNG stream for one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Error::domain("thread count must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::domain(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

const CHUNK: u64 = 4096;

/// Counts successes of `trial(i)` over `0..trials`, in parallel chunks.
fn count_successes<F>(trials: u64, threads: Option<usize>, trial: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    with_threads(threads, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let end = ((c + 1) * CHUNK).min(trials);
                let mut hits = 0u64;
                for i in c * CHUNK..end {
                    hits += u64::from(trial(i)?);
                }
                Ok(hits)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?
}

/// Reduced-sampler estimate of the rigged upper event or the zero-delay
/// exact event.
pub fn estimate(
    mode: EstimateMode,
    k: ConfirmationDepth,
    params: &ProtocolParams,
    trials: u64,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::TrialBudget);
    }
    params.require_bounds_valid()?;
    let p = match mode {
        EstimateMode::RiggedUpper => params.p(),
        EstimateMode::Delta0Exact => {
            if params.rho() <= 0.5 {
                return Err(Error::FaultToleranceExceeded { p: params.rho() });
            }
            params.rho()
        }
    };
    let successes = count_successes(trials, threads, |i| {
        let mut rng = trial_rng(master_seed, i);
        let t = sample_reduced_trial(k, p, &mut rng)?;
        Ok(match mode {
            EstimateMode::RiggedUpper => t.rigged_event,
            EstimateMode::Delta0Exact => t.exact_event,
        })
    })?;
    Ok(Estimate::from_counts(trials, successes))
}

/// Settings of the sample-path simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSimConfig {
    /// Expected number of blocks mined before the target transaction appears.
    /// `None` selects `max(200, 40 / (2p - 1)^2)`.
    pub burn_in_blocks: Option<f64>,
    pub epsilon_halt: f64,
}

impl Default for FullSimConfig {
    fn default() -> Self {
        Self {
            burn_in_blocks: None,
            epsilon_halt: 1e-12,
        }
    }
}

impl FullSimConfig {
    pub fn burn_in_for(&self, p: f64) -> f64 {
        self.burn_in_blocks
            .unwrap_or_else(|| (40.0 / (2.0 * p - 1.0).powi(2)).max(200.0))
    }
}

/// Estimate from the sample-path simulator plus the number of trials whose
/// path ran out before the attack was decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSimEstimate {
    pub estimate: Estimate,
    pub horizon_halted: u64,
    /// Target-transaction time, seconds.
    pub tau: f64,
    /// Path length, seconds.
    pub duration: f64,
}

impl FullSimEstimate {
    pub fn horizon_fraction(&self) -> f64 {
        self.horizon_halted as f64 / self.estimate.trials as f64
    }
}

/// Generates an independent path per trial, runs the private-mining attack on
/// it and counts successes.
pub fn full_sim_estimate(
    params: &ProtocolParams,
    k: ConfirmationDepth,
    trials: u64,
    config: &FullSimConfig,
    master_seed: u64,
    threads: Option<usize>,
) -> Result<FullSimEstimate> {
    if trials == 0 {
        return Err(Error::TrialBudget);
    }
    params.require_bounds_valid()?;
    if !(config.epsilon_halt > 0.0 && config.epsilon_halt < 1.0) {
        return Err(Error::domain(format!(
            "epsilon_halt = {} must lie in (0, 1)",
            config.epsilon_halt
        )));
    }
    let p = params.p();
    let burn_in = config.burn_in_for(p);
    if !(burn_in >= 0.0 && burn_in.is_finite()) {
        return Err(Error::domain(format!("burn-in = {burn_in} must be >= 0")));
    }
    // Post-tau budget: four times the expected number of blocks for the
    // honest chain to pull `2k` plus the halting deficit ahead.
    let halt_deficit = if p < 1.0 {
        config.epsilon_halt.ln() / ((1.0 - p) / p).ln() + 1.0
    } else {
        1.0
    };
    let race_blocks = 4.0 * (2.0 * k.get() as f64 + halt_deficit) / (2.0 * p - 1.0) + 200.0;
    let tau = burn_in / params.lambda();
    let duration = tau + race_blocks / params.lambda();

    let horizon = std::sync::atomic::AtomicU64::new(0);
    let successes = count_successes(trials, threads, |i| {
        let mut rng = trial_rng(master_seed, i);
        let mut path = generate_sample_path(params, duration, &mut rng)?;
        let out = run_private_mining_attack(&mut path, k, tau, config.epsilon_halt)?;
        if out.halt_reason == HaltReason::Horizon {
            horizon.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(out.success)
    })?;
    Ok(FullSimEstimate {
        estimate: Estimate::from_counts(trials, successes),
        horizon_halted: horizon.into_inner(),
        tau,
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{thm2_lower, thm2_upper};

    fn depth(k: u64) -> ConfirmationDepth {
        ConfirmationDepth::new(k).unwrap()
    }

    #[test]
    fn estimate_fields() {
        let e = Estimate::from_counts(100, 25);
        assert_eq!(e.point, 0.25);
        assert!((e.ci_halfwidth_3sigma - 3.0 * (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_trials_rejected() {
        let params = ProtocolParams::new(1.0, 0.9, 0.0).unwrap();
        assert_eq!(
            estimate(EstimateMode::RiggedUpper, depth(1), &params, 0, 1, None),
            Err(Error::TrialBudget)
        );
        assert_eq!(
            full_sim_estimate(&params, depth(1), 0, &FullSimConfig::default(), 1, None)
                .map(|e| e.estimate),
            Err(Error::TrialBudget)
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let params = ProtocolParams::new(1.0 / 600.0, 0.8, 10.0).unwrap();
        let a = estimate(
            EstimateMode::RiggedUpper,
            depth(3),
            &params,
            50_000,
            42,
            Some(1),
        )
        .unwrap();
        let b = estimate(
            EstimateMode::RiggedUpper,
            depth(3),
            &params,
            50_000,
            42,
            Some(4),
        )
        .unwrap();
        let c = estimate(
            EstimateMode::RiggedUpper,
            depth(3),
            &params,
            50_000,
            42,
            None,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = estimate(
            EstimateMode::RiggedUpper,
            depth(3),
            &params,
            50_000,
            43,
            None,
        )
        .unwrap();
        assert_ne!(a.successes, d.successes);
    }

    #[test]
    fn rigged_upper_single_block_depth() {
        let params = ProtocolParams::new(1.0 / 600.0, 0.8, 10.0).unwrap();
        let e = estimate(
            EstimateMode::RiggedUpper,
            depth(1),
            &params,
            100_000,
            5,
            None,
        )
        .unwrap();
        assert!(e.within_3sigma_of(thm2_upper(depth(1), &params).unwrap()));
    }

    #[test]
    fn delta0_exact_six_blocks() {
        let params = ProtocolParams::new(1.0 / 600.0, 0.9, 10.0).unwrap();
        let e = estimate(
            EstimateMode::Delta0Exact,
            depth(6),
            &params,
            1_000_000,
            42,
            None,
        )
        .unwrap();
        assert!(
            e.within_3sigma_of(thm2_lower(depth(6), 0.9).unwrap()),
            "{e:?}"
        );
    }

    #[test]
    fn full_sim_without_adversary_never_succeeds() {
        let params = ProtocolParams::new(1.0, 1.0, 0.0).unwrap();
        let r = full_sim_estimate(&params, depth(2), 2_000, &FullSimConfig::default(), 3, None)
            .unwrap();
        assert_eq!(r.estimate.successes, 0);
        assert_eq!(r.horizon_halted, 0);
    }

    #[test]
    fn full_sim_zero_delay_small_depth() {
        let params = ProtocolParams::new(1.0, 0.75, 0.0).unwrap();
        let r = full_sim_estimate(
            &params,
            depth(1),
            20_000,
            &FullSimConfig::default(),
            9,
            None,
        )
        .unwrap();
        assert!(
            r.estimate
                .within_3sigma_of(thm2_lower(depth(1), 0.75).unwrap()),
            "{r:?}"
        );
        assert_eq!(r.horizon_halted, 0);
    }
}
