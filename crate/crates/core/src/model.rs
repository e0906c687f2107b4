//! Protocol parameters and the geometric / binomial distribution primitives
//! every bound and sampler is assembled from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial_pmf_interior, CompensatedSum};

/// Environment of the longest-chain protocol: total mining rate, honest
/// fraction and propagation delay bound, plus the quantities derived from them.
///
/// `g = e^(-lambda*delta)` is the probability a block is a lagger, and
/// `p = rho*g` is the probability a block is honest once honest tailgaters
/// have been converted to adversarial blocks. All bounds require `p > 1/2`,
/// which is recorded in `bounds_valid` rather than enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    lambda: f64,
    rho: f64,
    delta: f64,
    g: f64,
    p: f64,
    q: f64,
    bounds_valid: bool,
}

impl ProtocolParams {
    /// Validates raw inputs and derives `g`, `p`, `q`.
    pub fn new(lambda: f64, rho: f64, delta: f64) -> Result<Self> {
        if !lambda.is_finite() || !rho.is_finite() || !delta.is_finite() {
            return Err(Error::domain(format!(
                "non-finite parameter (lambda = {lambda}, rho = {rho}, delta = {delta})"
            )));
        }
        if lambda <= 0.0 {
            return Err(Error::domain(format!("lambda = {lambda} must be > 0")));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::domain(format!("rho = {rho} must lie in (0, 1]")));
        }
        if delta < 0.0 {
            return Err(Error::domain(format!("delta = {delta} must be >= 0")));
        }
        let g = (-lambda * delta).exp();
        let p = rho * g;
        // q = 1 - rho*g, written to keep precision when rho*g is close to 1
        let q = if g == 1.0 {
            1.0 - rho
        } else {
            (1.0 - rho) + rho * -(-lambda * delta).exp_m1()
        };
        Ok(Self {
            lambda,
            rho,
            delta,
            g,
            p,
            q,
            bounds_valid: p > 0.5,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lagger probability `e^(-lambda*delta)`.
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Honest-block probability in the rigged model.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn bounds_valid(&self) -> bool {
        self.bounds_valid
    }

    /// Fails with `FaultToleranceExceeded` unless `p > 1/2`.
    pub fn require_bounds_valid(&self) -> Result<()> {
        if self.bounds_valid {
            Ok(())
        } else {
            Err(Error::FaultToleranceExceeded { p: self.p })
        }
    }

    /// Same environment with the delay bound set to zero.
    pub fn with_zero_delay(&self) -> Self {
        Self::new(self.lambda, self.rho, 0.0).expect("already validated")
    }
}

/// Confirmation depth: a block is committed once it and `k - 1` blocks on top
/// of it are in a longest chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct ConfirmationDepth(u64);

impl ConfirmationDepth {
    pub fn new(k: u64) -> Result<Self> {
        if k == 0 {
            Err(Error::domain("confirmation depth must be >= 1"))
        } else {
            Ok(Self(k))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for ConfirmationDepth {
    type Error = Error;

    fn try_from(k: u64) -> Result<Self> {
        Self::new(k)
    }
}

impl From<ConfirmationDepth> for u64 {
    fn from(k: ConfirmationDepth) -> u64 {
        k.0
    }
}

impl fmt::Display for ConfirmationDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_geometric_p(p: f64) -> Result<()> {
    if p > 0.5 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "geometric parameter p = {p} must lie in (1/2, 1]"
        )))
    }
}

fn check_probability(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "binomial parameter q = {q} must lie in [0, 1]"
        )))
    }
}

fn ratio_pow(ratio: f64, exponent: u64) -> f64 {
    match i32::try_from(exponent) {
        Ok(e) => ratio.powi(e),
        Err(_) => (exponent as f64 * ratio.ln()).exp(),
    }
}

/// Geometric pmf on `{1, 2, ...}`: `(q/p)^(i-1) (1 - q/p)`.
pub fn geom_pmf(i: u64, p: f64) -> Result<f64> {
    check_geometric_p(p)?;
    if i == 0 {
        return Err(Error::domain("geometric pmf is supported on i >= 1"));
    }
    if p == 1.0 {
        return Ok(if i == 1 { 1.0 } else { 0.0 });
    }
    let ratio = (1.0 - p) / p;
    Ok(ratio_pow(ratio, i - 1) * (1.0 - ratio))
}

/// Geometric complementary cdf `(q/p)^i`, saturating to 1 for `i < 0`.
pub fn geom_ccdf(i: i64, p: f64) -> Result<f64> {
    check_geometric_p(p)?;
    if i <= 0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok(ratio_pow((1.0 - p) / p, i as u64))
}

/// Binomial pmf `C(n,j) q^j (1-q)^(n-j)`, zero outside `0..=n`.
pub fn binom_pmf(j: i64, n: u64, q: f64) -> Result<f64> {
    check_probability(q)?;
    Ok(binom_pmf_unchecked(j, n, q))
}

pub(crate) fn binom_pmf_unchecked(j: i64, n: u64, q: f64) -> f64 {
    if j < 0 || j as u64 > n {
        return 0.0;
    }
    let j = j as u64;
    if q == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if q == 1.0 {
        return if j == n { 1.0 } else { 0.0 };
    }
    if n == 0 {
        return 1.0;
    }
    ln_binomial_pmf_interior(j as f64, n as f64, q).exp()
}

/// Binomial complementary cdf `Pr(X > j)` for `X ~ Binomial(n, q)`;
/// 1 below the support and 0 at or above `n`.
pub fn binom_ccdf(j: i64, n: u64, q: f64) -> Result<f64> {
    check_probability(q)?;
    Ok(binom_ccdf_unchecked(j, n, q))
}

pub(crate) fn binom_ccdf_unchecked(j: i64, n: u64, q: f64) -> f64 {
    if j < 0 {
        return 1.0;
    }
    if j as u64 >= n {
        return 0.0;
    }
    let tail: CompensatedSum = ((j + 1)..=(n as i64))
        .map(|l| binom_pmf_unchecked(l, n, q))
        .collect();
    tail.value().clamp(0.0, 1.0)
}
