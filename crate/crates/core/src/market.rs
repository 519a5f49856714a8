//! Contract and market description plus the closed-form per-share price
//! fractions of a firm that has issued warrants.
//!
//! The firm value `X(t)` is the single source of randomness. Two fractions of
//! it bracket the traded share price: the undiluted price `X/N` (warrants
//! certainly lapse) and the diluted price `(X + D*M*K)/(N+M)` (warrants
//! certainly exercised, with the strike proceeds discounted back from
//! maturity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of the firm and the warrant contract.
///
/// All currency values are plain `f64`; nothing is rounded to cents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Initial firm value `X(0)`.
    pub x0: f64,
    /// Number of shares outstanding before exercise.
    pub n_shares: u64,
    /// Number of warrants outstanding.
    pub m_warrants: u64,
    /// Exercise price per warrant.
    pub strike: f64,
    /// Threshold level the traded share price must reach before the warrants
    /// become exercisable.
    pub threshold: f64,
    /// Maturity in years.
    pub maturity: f64,
    /// Firm-value volatility per square-root year.
    pub sigma: f64,
    /// Continuously compounded risk-free rate per year.
    pub rate: f64,
}

impl MarketParams {
    /// Builds a validated parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x0: f64,
        n_shares: u64,
        m_warrants: u64,
        strike: f64,
        threshold: f64,
        maturity: f64,
        sigma: f64,
        rate: f64,
    ) -> Result<Self> {
        let params = MarketParams {
            x0,
            n_shares,
            m_warrants,
            strike,
            threshold,
            maturity,
            sigma,
            rate,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks every invariant of the parameter set.
    ///
    /// The threshold must sit strictly above both the initial undiluted share
    /// price and the strike; otherwise it would effectively not exist.
    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0) || !self.x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "x0 must be positive and finite, got {}",
                self.x0
            )));
        }
        if self.n_shares == 0 {
            return Err(Error::InvalidInput(
                "n_shares must be at least 1".to_string(),
            ));
        }
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Error::InvalidInput(format!(
                "strike must be positive and finite, got {}",
                self.strike
            )));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::InvalidInput(format!(
                "maturity must be positive and finite, got {}",
                self.maturity
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rate must be non-negative and finite, got {}",
                self.rate
            )));
        }
        let s0 = self.x0 / self.n_shares as f64;
        if !(self.threshold > s0) {
            return Err(Error::InvalidInput(format!(
                "threshold must exceed the initial undiluted price: threshold = {}, x0/n_shares = {}",
                self.threshold, s0
            )));
        }
        if !(self.threshold > self.strike) {
            return Err(Error::InvalidInput(format!(
                "threshold must exceed the strike: threshold = {}, strike = {}",
                self.threshold, self.strike
            )));
        }
        Ok(())
    }

    /// Checks only the fields a firm-value lattice depends on, leaving the
    /// threshold contract aside. Lets tests study degenerate thresholds
    /// that the full contract forbids.
    pub(crate) fn validate_dynamics(&self) -> Result<()> {
        if !(self.x0 > 0.0) || !self.x0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "x0 must be positive and finite, got {}",
                self.x0
            )));
        }
        if self.n_shares == 0 {
            return Err(Error::InvalidInput(
                "n_shares must be at least 1".to_string(),
            ));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::InvalidInput(format!(
                "maturity must be positive and finite, got {}",
                self.maturity
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rate must be non-negative and finite, got {}",
                self.rate
            )));
        }
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Error::InvalidInput(format!(
                "strike must be positive and finite, got {}",
                self.strike
            )));
        }
        Ok(())
    }

    /// Initial undiluted share price `X(0)/N`.
    pub fn initial_undiluted_price(&self) -> f64 {
        self.x0 / self.n_shares as f64
    }

    /// Discount curve implied by the flat rate.
    pub fn discount_curve(&self) -> DiscountCurve {
        DiscountCurve { rate: self.rate }
    }
}

/// Flat continuously compounded discount curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountCurve {
    /// Per-year rate.
    pub rate: f64,
}

impl DiscountCurve {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "rate must be non-negative and finite, got {rate}"
            )));
        }
        Ok(DiscountCurve { rate })
    }

    /// Discount factor from `t1` to `t2`, i.e. `exp(-r * (t2 - t1))`.
    ///
    /// For `t1 <= t2` the factor lies in `(0, 1]`; swapping the arguments
    /// returns the reciprocal.
    pub fn factor(&self, t1: f64, t2: f64) -> f64 {
        (-self.rate * (t2 - t1)).exp()
    }
}

/// Share price when warrants certainly lapse (or do not exist): `x / N`.
pub fn undiluted_price(x: f64, params: &MarketParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "firm value must be positive, got {x}"
        )));
    }
    Ok(x / params.n_shares as f64)
}

/// Share price when warrants will certainly be exercised:
/// `(x + D(t,T) * M * K) / (N + M)`.
///
/// The exercise proceeds `M * K` arrive at maturity and are discounted back
/// to `t`. With `M = 0` this coincides with [`undiluted_price`].
pub fn diluted_price(x: f64, t: f64, params: &MarketParams, curve: &DiscountCurve) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "firm value must be positive, got {x}"
        )));
    }
    if !(0.0..=params.maturity).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "time {t} outside [0, {}]",
            params.maturity
        )));
    }
    let n = params.n_shares as f64;
    let m = params.m_warrants as f64;
    let d = curve.factor(t, params.maturity);
    Ok((x + d * m * params.strike) / (n + m))
}

/// Payoff of one warrant at maturity: `max((x_T + M*K)/(N+M) - K, 0)`.
///
/// Algebraically identical to `N/(N+M) * max(x_T/N - K, 0)`, the dilution
/// fraction of a plain call on the per-share firm value; the payoff is
/// strictly positive exactly when `x_T > N*K`.
pub fn warrant_payoff(x_t: f64, params: &MarketParams) -> Result<f64> {
    if !(x_t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "terminal firm value must be positive, got {x_t}"
        )));
    }
    let n = params.n_shares as f64;
    let m = params.m_warrants as f64;
    let k = params.strike;
    Ok(((x_t + m * k) / (n + m) - k).max(0.0))
}
