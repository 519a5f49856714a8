//! Lattice laboratory for dilutive warrants with stock-price threshold
//! conditions.
//!
//! The crate models a firm whose value follows a recombining binomial tree
//! and that has issued warrants exercisable only if the traded share price
//! reaches a threshold before maturity. It derives the admissible share
//! price band from the classical-warrant process, certifies that no
//! martingale measure can support the thresholded share price, and prices
//! the warrant by utility indifference under trading constraints.

// Validation deliberately writes `!(x > 0.0)` so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod classical;
pub mod config;
pub mod error;
pub mod indifference;
pub mod lattice;
pub mod market;
pub mod oracle;
pub mod threshold;

mod numerics;

pub use arbitrage::{
    certify_no_martingale, check_dilution_gap, compute_bounds, critical_upticks, minimal_steps,
    propagate_upticks, ArbitrageCertificate, CertifyOptions, CriticalUpticks,
};
pub use classical::{price_classical_warrant, stock_price_under_warrants, WarrantSurface};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use indifference::{
    indifference_price, optimize_delta, price_threshold_warrant, threshold_warrant_claim,
    value_surface, wealth_step, Claim, DeltaSearch, EngineConfig, IndifferenceSolution,
    Interpolation, MarketTree, SimpleBinomial, ThresholdPricing, UtilityFunction, ValueSurface,
    WealthGrid,
};
pub use lattice::{
    build_lattice, build_lattice_with_uptick, risk_neutral_expectation, Lattice, LatticeSpec,
    NodeIndex,
};
pub use market::{diluted_price, undiluted_price, warrant_payoff, DiscountCurve, MarketParams};
pub use threshold::{
    AugmentedLattice, AugmentedNode, Direction, SelectorPolicy, ThresholdState, TradeLimits,
};
