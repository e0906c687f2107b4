//! The private-mining attack executed on a sample path in the rigged model.
//!
//! Only the rigged role of each block matters: honest nodes mine rigged-honest
//! blocks on the highest honest block, and every other block belongs to the
//! adversary, who keeps it private. Honest blocks become public exactly
//! `delta` seconds after they are mined.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConfirmationDepth;
use crate::sim::path::{Role, SamplePath};
use crate::sim::reduced::ReducedTrial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Success,
    /// The residual success probability fell below the halting threshold.
    DeficitThreshold,
    /// The path ran out of blocks first.
    Horizon,
}

/// Realized race statistics, in the same terms as [`ReducedTrial`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceTrace {
    /// Adversarial blocks among the first `max(2k - lead, 0)` blocks after tau
    /// (fewer if the attack halted inside that window).
    pub window_adversarial: u64,
    /// Highest excess of adversarial over honest blocks after the window, so
    /// far.
    pub max_reach_so_far: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub success: bool,
    pub lead_at_tau: u64,
    /// Mined blocks (genesis excluded) processed before halting.
    pub blocks_consumed: usize,
    pub halt_reason: HaltReason,
    pub trace: RaceTrace,
}

impl AttackOutcome {
    /// Rebuilds the reduced-sampler view of this run.
    pub fn as_reduced(&self, k: ConfirmationDepth) -> ReducedTrial {
        ReducedTrial::from_parts(
            k,
            self.lead_at_tau,
            self.trace.window_adversarial,
            self.trace.max_reach_so_far,
        )
    }
}

/// Smallest deficit `d >= 1` with `(q/p)^d < epsilon_halt`.
fn halting_deficit(p: f64, epsilon_halt: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let ratio = (1.0 - p) / p;
    let d = (epsilon_halt.ln() / ratio.ln()).floor() + 1.0;
    d.max(1.0) as u64
}

/// Runs the two-stage private-mining attack on `path`, writing each processed
/// block's height and parent.
///
/// Up to `tau` the adversary mines on its private tip while its lead is
/// positive and on the honest tip otherwise. The first honest block after
/// `tau` carries the target transaction at height `h + 1`. The attack succeeds
/// at the first moment its private chain is no shorter than the public honest
/// chain and reaches height `h + k`.
pub fn run_private_mining_attack(
    path: &mut SamplePath,
    k: ConfirmationDepth,
    tau: f64,
    epsilon_halt: f64,
) -> Result<AttackOutcome> {
    if !(tau >= 0.0 && tau <= path.duration) {
        return Err(Error::domain(format!(
            "tau = {tau} must lie within the path duration [0, {}]",
            path.duration
        )));
    }
    if !(epsilon_halt > 0.0 && epsilon_halt < 1.0) {
        return Err(Error::domain(format!(
            "epsilon_halt = {epsilon_halt} must lie in (0, 1)"
        )));
    }
    let params = path.params;
    params.require_bounds_valid()?;
    let delta = params.delta();
    let halt_at = halting_deficit(params.p(), epsilon_halt);
    // with delay, the latest honest block may still be in flight
    let unpublished_slack = u64::from(delta > 0.0);

    let mut honest_height = 0u64;
    let mut honest_tip = 0usize;
    let mut private_height = 0u64;
    let mut private_tip = 0usize;
    let mut public_height = 0u64;
    let mut in_flight: VecDeque<(f64, u64)> = VecDeque::new();

    let blocks = &mut path.blocks;
    let mut next = 1;

    // stage one
    while next < blocks.len() && blocks[next].mine_time <= tau {
        let block = &mut blocks[next];
        match block.rigged_role {
            Role::Honest => {
                honest_height += 1;
                block.height = Some(honest_height);
                block.parent_index = Some(honest_tip);
                honest_tip = block.index;
                in_flight.push_back((block.mine_time + delta, honest_height));
                if private_height < honest_height {
                    private_height = honest_height;
                    private_tip = honest_tip;
                }
            }
            Role::Adversarial => {
                private_height += 1;
                block.height = Some(private_height);
                block.parent_index = Some(private_tip);
                private_tip = block.index;
            }
        }
        next += 1;
    }

    let base = honest_height;
    let lead = private_height - honest_height;
    let window = ReducedTrial::window_len(k, lead);
    let mut trace = RaceTrace {
        window_adversarial: 0,
        max_reach_so_far: 0,
    };
    let mut post_tau = 0u64;
    let mut walk = 0i64;

    let publish_until = |t: f64, in_flight: &mut VecDeque<(f64, u64)>, public: &mut u64| {
        while let Some(&(at, h)) = in_flight.front() {
            if at <= t {
                *public = h;
                in_flight.pop_front();
            } else {
                break;
            }
        }
    };
    publish_until(tau, &mut in_flight, &mut public_height);

    let succeeded = |private: u64, public: u64| private >= base + k.get() && private >= public;
    let outcome = |success, halt_reason, consumed, trace| AttackOutcome {
        success,
        lead_at_tau: lead,
        blocks_consumed: consumed,
        halt_reason,
        trace,
    };

    if succeeded(private_height, public_height) {
        return Ok(outcome(true, HaltReason::Success, next - 1, trace));
    }

    // stage two: the adversary only ever extends its own chain
    while next < blocks.len() {
        let block = &mut blocks[next];
        let t = block.mine_time;
        post_tau += 1;
        match block.rigged_role {
            Role::Honest => {
                honest_height += 1;
                block.height = Some(honest_height);
                block.parent_index = Some(honest_tip);
                honest_tip = block.index;
                in_flight.push_back((t + delta, honest_height));
                if post_tau > window {
                    walk -= 1;
                }
            }
            Role::Adversarial => {
                private_height += 1;
                block.height = Some(private_height);
                block.parent_index = Some(private_tip);
                private_tip = block.index;
                if post_tau <= window {
                    trace.window_adversarial += 1;
                } else {
                    walk += 1;
                    trace.max_reach_so_far = trace.max_reach_so_far.max(walk.max(0) as u64);
                }
            }
        }
        next += 1;
        publish_until(t, &mut in_flight, &mut public_height);

        if succeeded(private_height, public_height) {
            return Ok(outcome(true, HaltReason::Success, next - 1, trace));
        }
        let deficit = honest_height.saturating_sub(private_height + unpublished_slack);
        if deficit >= halt_at {
            return Ok(outcome(
                false,
                HaltReason::DeficitThreshold,
                next - 1,
                trace,
            ));
        }
    }
    Ok(outcome(false, HaltReason::Horizon, next - 1, trace))
}

/// Heights of rigged-honest blocks strictly increase in mining order over the
/// processed part of the path.
pub fn honest_heights_strictly_increase(path: &SamplePath) -> bool {
    let mut last = 0u64;
    for block in path.mined() {
        if block.rigged_role != Role::Honest {
            continue;
        }
        match block.height {
            Some(h) if h > last => last = h,
            Some(_) => return false,
            None => break,
        }
    }
    true
}

/// Consecutive rigged-honest blocks are mined at least `delta` apart, so each
/// reaches every honest node before the next is mined.
pub fn honest_gaps_exceed_delay(path: &SamplePath) -> bool {
    let delta = path.params.delta();
    let mut last = None;
    for block in path.mined() {
        if block.rigged_role == Role::Honest {
            if let Some(prev) = last {
                if block.mine_time - prev < delta {
                    return false;
                }
            }
            last = Some(block.mine_time);
        }
    }
    true
}

/// Lead after each processed block, from assigned heights: the highest
/// height so far minus the highest rigged-honest height so far.
pub fn lead_trajectory(path: &SamplePath) -> Vec<u64> {
    let mut top = 0u64;
    let mut top_honest = 0u64;
    let mut leads = Vec::new();
    for block in path.mined() {
        let Some(h) = block.height else { break };
        top = top.max(h);
        if block.rigged_role == Role::Honest {
            top_honest = top_honest.max(h);
        }
        leads.push(top - top_honest);
    }
    leads
}
