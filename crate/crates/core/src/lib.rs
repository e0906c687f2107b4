//! Latency-security bounds for longest-chain proof-of-work consensus.
//!
//! [`bounds`] evaluates closed-form upper and lower bounds on the probability
//! that a transaction confirmed `k` blocks deep is reverted, given the total
//! mining rate, the honest fraction of mining power and a propagation delay
//! bound. [`sim`] checks those bounds by Monte Carlo, both through the
//! lead / binomial / maximum-reach decomposition and by running the
//! private-mining attack on simulated Poisson block arrivals.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod model;
mod numeric;
pub mod sim;

pub use bounds::{
    bounds_report, min_depth_for_risk, sweep, thm1_lower, thm1_upper, thm2_lower, thm2_upper,
    BoundKind, BoundsReport, DepthSearch, SweepTable,
};
pub use error::{Error, Result};
pub use model::{ConfirmationDepth, ProtocolParams};
pub use numeric::CompensatedSum;
