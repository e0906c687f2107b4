//! Direct sampling of the (lead, window count, maximum reach) decomposition.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConfirmationDepth;

fn check_p(p: f64) -> Result<()> {
    if p > 0.5 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("p = {p} must lie in (1/2, 1]")))
    }
}

/// Draws `X` with `Pr(X >= l) = (q/p)^l`, `l = 0, 1, ...`, by inversion.
fn sample_geometric_tail<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p == 1.0 {
        return 0;
    }
    let ln_ratio = ((1.0 - p) / p).ln();
    // u in (0, 1] so ln(u) is finite
    let u = 1.0 - rng.random::<f64>();
    let x = (u.ln() / ln_ratio).floor();
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    }
}

/// Lead of the adversary at a well-mixed time: the stationary law of the
/// birth-death chain that steps up with probability `q` and down (reflected
/// at zero) with probability `p`.
pub fn sample_stationary_lead<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    check_p(p)?;
    Ok(sample_geometric_tail(p, rng))
}

/// Supremum of a ±1 walk started at zero that steps up with probability `q`.
/// Same law as the stationary lead.
pub fn sample_max_reach<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    check_p(p)?;
    Ok(sample_geometric_tail(p, rng))
}

/// One draw of `(L, B, M)` and the two threshold events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedTrial {
    /// Lead at the time the target transaction appears.
    pub lead: u64,
    /// Adversarial blocks among the next `max(2k - lead, 0)` blocks.
    pub window_adversarial: u64,
    /// Maximum reach of the race after that window.
    pub max_reach: u64,
    /// `2L + 2B + M >= 2k - 1`.
    pub rigged_event: bool,
    /// `2L + 2B + M >= 2k`.
    pub exact_event: bool,
}

impl ReducedTrial {
    pub fn from_parts(
        k: ConfirmationDepth,
        lead: u64,
        window_adversarial: u64,
        max_reach: u64,
    ) -> Self {
        let score =
            2u128 * u128::from(lead) + 2 * u128::from(window_adversarial) + u128::from(max_reach);
        let two_k = 2 * u128::from(k.get());
        Self {
            lead,
            window_adversarial,
            max_reach,
            rigged_event: score + 1 >= two_k,
            exact_event: score >= two_k,
        }
    }

    pub fn window_len(k: ConfirmationDepth, lead: u64) -> u64 {
        (2 * k.get()).saturating_sub(lead)
    }
}

pub fn sample_reduced_trial<R: Rng + ?Sized>(
    k: ConfirmationDepth,
    p: f64,
    rng: &mut R,
) -> Result<ReducedTrial> {
    check_p(p)?;
    let lead = sample_geometric_tail(p, rng);
    let window = ReducedTrial::window_len(k, lead);
    let window_adversarial = if window == 0 || p == 1.0 {
        0
    } else {
        Binomial::new(window, 1.0 - p)
            .map_err(|e| Error::domain(e.to_string()))?
            .sample(rng)
    };
    let max_reach = sample_geometric_tail(p, rng);
    Ok(ReducedTrial::from_parts(
        k,
        lead,
        window_adversarial,
        max_reach,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn no_adversary_gives_zero_everything() {
        let mut r = rng();
        for _ in 0..100 {
            assert_eq!(sample_stationary_lead(1.0, &mut r).unwrap(), 0);
            assert_eq!(sample_max_reach(1.0, &mut r).unwrap(), 0);
            let t = sample_reduced_trial(ConfirmationDepth::new(1).unwrap(), 1.0, &mut r).unwrap();
            assert_eq!((t.lead, t.window_adversarial, t.max_reach), (0, 0, 0));
            assert!(!t.rigged_event && !t.exact_event);
        }
    }

    #[test]
    fn rejects_minority_honest() {
        let mut r = rng();
        assert!(sample_stationary_lead(0.5, &mut r).is_err());
        assert!(sample_max_reach(0.3, &mut r).is_err());
        assert!(sample_reduced_trial(ConfirmationDepth::new(2).unwrap(), 0.4, &mut r).is_err());
    }

    #[test]
    fn lead_mean_matches_geometric() {
        let p: f64 = 0.885_124;
        let ratio = (1.0 - p) / p;
        let mean = ratio / (1.0 - ratio);
        let var = ratio / (1.0 - ratio).powi(2);
        let n = 1_000_000;
        let mut r = rng();
        let total: u64 = (0..n)
            .map(|_| sample_stationary_lead(p, &mut r).unwrap())
            .sum();
        let est = total as f64 / n as f64;
        assert!(
            (est - mean).abs() <= 3.0 * (var / n as f64).sqrt(),
            "{est} vs {mean}"
        );
    }

    #[test]
    fn max_reach_tail_matches_geometric() {
        let p: f64 = 0.75;
        let n = 400_000;
        let mut r = rng();
        let draws: Vec<u64> = (0..n)
            .map(|_| sample_max_reach(p, &mut r).unwrap())
            .collect();
        for l in 1..=8 {
            let expected = (1.0f64 / 3.0).powi(l);
            let hits = draws.iter().filter(|&&m| m >= l as u64).count() as f64 / n as f64;
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!(
                (hits - expected).abs() <= 3.0 * sigma,
                "l = {l}: {hits} vs {expected}"
            );
        }
    }

    #[test]
    fn window_never_exceeds_trial_count() {
        let k = ConfirmationDepth::new(3).unwrap();
        let mut r = rng();
        for _ in 0..50_000 {
            let t = sample_reduced_trial(k, 0.6, &mut r).unwrap();
            assert!(t.window_adversarial <= ReducedTrial::window_len(k, t.lead));
            assert!(!t.exact_event || t.rigged_event);
        }
    }

    #[test]
    fn event_thresholds() {
        let k = ConfirmationDepth::new(3).unwrap();
        // 2*1 + 2*1 + 1 = 5 = 2k - 1
        let t = ReducedTrial::from_parts(k, 1, 1, 1);
        assert!(t.rigged_event && !t.exact_event);
        let t = ReducedTrial::from_parts(k, 1, 1, 2);
        assert!(t.rigged_event && t.exact_event);
        let t = ReducedTrial::from_parts(k, 0, 2, 0);
        assert!(!t.rigged_event);
        assert_eq!(ReducedTrial::window_len(k, 9), 0);
    }
}
