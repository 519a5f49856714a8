//! Run configuration: one flat TOML file per experiment.
//!
//! The `[market]` section maps one-to-one onto [`MarketParams`]; the other
//! sections configure the lattice depth, the pre-hit price selector and the
//! indifference-pricing engine. Commands validate only the sections they
//! need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketParams;
use crate::threshold::SelectorPolicy;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n_steps: usize,
    /// Optional explicit uptick ratio, superseding the volatility link.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_override: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Pre-hit selector: `lower | upper | blend:<lambda> | expected`.
    #[serde(default = "default_selector")]
    pub selector: String,
    /// Probability that a trade occurs at each step. Reserved; only the
    /// always-trading value 1 is supported.
    #[serde(default = "default_trade_probability")]
    pub p_trade: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            selector: default_selector(),
            p_trade: default_trade_probability(),
        }
    }
}

fn default_selector() -> String {
    "expected".to_string()
}

fn default_trade_probability() -> f64 {
    1.0
}

impl ThresholdConfig {
    pub fn policy(&self) -> Result<SelectorPolicy> {
        if self.p_trade != 1.0 {
            return Err(Error::Config(format!(
                "p_trade: only the always-trading value 1 is supported, got {}",
                self.p_trade
            )));
        }
        self.selector.parse()
    }
}

/// Pricing mode: the threshold warrant on the firm-value lattice, or a
/// plain call on a directly specified stock tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingMode {
    Threshold,
    PlainCall,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingConfig {
    #[serde(default = "default_mode")]
    pub mode: PricingMode,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Physical up-probability; defaults to the risk-neutral one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_physical: Option<f64>,
    /// Per-step position limits; both absent means unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub wealth_grid_points: usize,
    #[serde(default = "default_tol_w")]
    pub tol_w: f64,
    /// Plain-call mode: initial price, move factors and strike.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_strike: Option<f64>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            mode: default_mode(),
            gamma: default_gamma(),
            p_physical: None,
            delta_min: None,
            delta_max: None,
            wealth_grid_points: default_grid_points(),
            tol_w: default_tol_w(),
            s0: None,
            u: None,
            d: None,
            call_strike: None,
        }
    }
}

fn default_mode() -> PricingMode {
    PricingMode::Threshold
}

fn default_gamma() -> f64 {
    1.0
}

fn default_grid_points() -> usize {
    801
}

fn default_tol_w() -> f64 {
    1e-6
}

/// Top-level run configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing: Option<PricingConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The market section, validated.
    pub fn market(&self) -> Result<&MarketParams> {
        let market = self
            .market
            .as_ref()
            .ok_or_else(|| Error::Config("missing [market] section".to_string()))?;
        market.validate()?;
        Ok(market)
    }

    pub fn lattice(&self) -> Result<&LatticeConfig> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::Config("missing [lattice] section with key n_steps".to_string()))
    }
}
