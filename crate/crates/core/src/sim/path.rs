//! Poisson block arrivals with miner marks and lagger / tailgater attributes.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProtocolParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Honest,
    Adversarial,
}

/// Whether any other block was mined within the delay bound before this one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalGap {
    Lagger,
    Tailgater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub index: usize,
    pub mine_time: f64,
    pub miner: Role,
    pub arrival_gap: ArrivalGap,
    /// Role after honest tailgaters are converted to adversarial blocks.
    pub rigged_role: Role,
    /// Assigned while an attack is executed on the path.
    pub height: Option<u64>,
    pub parent_index: Option<usize>,
}

impl Block {
    pub fn genesis() -> Self {
        Block {
            index: 0,
            mine_time: 0.0,
            miner: Role::Honest,
            arrival_gap: ArrivalGap::Lagger,
            rigged_role: Role::Honest,
            height: Some(0),
            parent_index: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub params: ProtocolParams,
    pub duration: f64,
    /// Genesis first, then blocks in mining order.
    pub blocks: Vec<Block>,
}

impl SamplePath {
    /// Mined blocks, excluding genesis.
    pub fn mined(&self) -> &[Block] {
        &self.blocks[1..]
    }
}

/// Unbounded stream of blocks after genesis.
pub struct BlockStream<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    inter_arrival: Exp<f64>,
    rho: f64,
    delta: f64,
    last_time: f64,
    next_index: usize,
}

impl<'a, R: Rng + ?Sized> BlockStream<'a, R> {
    pub fn new(params: &ProtocolParams, rng: &'a mut R) -> Result<Self> {
        let inter_arrival = Exp::new(params.lambda()).map_err(|e| Error::domain(e.to_string()))?;
        Ok(Self {
            rng,
            inter_arrival,
            rho: params.rho(),
            delta: params.delta(),
            last_time: 0.0,
            next_index: 1,
        })
    }
}

impl<R: Rng + ?Sized> Iterator for BlockStream<'_, R> {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        let gap = self.inter_arrival.sample(self.rng);
        let mine_time = self.last_time + gap;
        let miner = if self.rng.random::<f64>() < self.rho {
            Role::Honest
        } else {
            Role::Adversarial
        };
        // the previous block (genesis included) is the only candidate within
        // (t - delta, t]
        let arrival_gap = if gap >= self.delta {
            ArrivalGap::Lagger
        } else {
            ArrivalGap::Tailgater
        };
        let rigged_role = match (miner, arrival_gap) {
            (Role::Honest, ArrivalGap::Lagger) => Role::Honest,
            _ => Role::Adversarial,
        };
        let block = Block {
            index: self.next_index,
            mine_time,
            miner,
            arrival_gap,
            rigged_role,
            height: None,
            parent_index: None,
        };
        self.last_time = mine_time;
        self.next_index += 1;
        Some(block)
    }
}

/// All blocks mined in `(0, duration]`, preceded by genesis.
pub fn generate_sample_path<R: Rng + ?Sized>(
    params: &ProtocolParams,
    duration: f64,
    rng: &mut R,
) -> Result<SamplePath> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::domain(format!(
            "duration = {duration} must be positive and finite"
        )));
    }
    let mut blocks = vec![Block::genesis()];
    blocks.extend(BlockStream::new(params, rng)?.take_while(|b| b.mine_time <= duration));
    Ok(SamplePath {
        params: *params,
        duration,
        blocks,
    })
}
