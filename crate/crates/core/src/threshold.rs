//! Concrete models for the share price in the presence of threshold
//! warrants, with hit-state tracking and per-step trade limits.
//!
//! Before the threshold is reached, the traded price can sit anywhere in the
//! admissible interval `[s_w, s]`; a selector policy picks the point. The
//! moment a trade happens at or above the threshold, exercise rights vest
//! and from the next step on the price follows the classical-warrant process
//! `s_w`. At maturity a path that never hit prices at the undiluted `s`
//! (warrants lapse), and a hit path prices at the terminal `s_w`.
//!
//! Trades are assumed to happen at the quoted price at every step, so hit
//! detection reads the realized price of each node before stepping; the node
//! that first crosses keeps its quoted price and its children switch. The
//! check includes the root for uniformity (in-scope parameter sets place the
//! threshold above the initial price, so nothing triggers there) and never
//! fires at maturity itself. Trading stays on at every step through
//! maturity.

use std::str::FromStr;

use crate::classical::WarrantSurface;
use crate::error::{Error, Result};
use crate::lattice::{fmt_significant, Lattice, NodeIndex};
use crate::market::warrant_payoff;

/// Direction of one lattice step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Rule selecting the pre-hit share price inside the admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectorPolicy {
    /// Always the lower bound, the classical-warrant price.
    Lower,
    /// Always the upper bound, the undiluted price.
    Upper,
    /// Fixed mix: `lambda` parts of the upper bound, the rest lower.
    Blend(f64),
    /// Mix weighted by the risk-neutral probability that the undiluted
    /// price touches the threshold before maturity; the touch probability
    /// weights the diluted bound. A modeling choice, not a derived result.
    ExpectedDilution,
}

impl SelectorPolicy {
    pub fn validate(&self) -> Result<()> {
        if let SelectorPolicy::Blend(lambda) = self {
            if !(0.0..=1.0).contains(lambda) {
                return Err(Error::InvalidInput(format!(
                    "blend weight must lie in [0, 1], got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

impl FromStr for SelectorPolicy {
    type Err = Error;

    /// Parses `lower | upper | blend:<lambda> | expected`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "lower" => Ok(SelectorPolicy::Lower),
            "upper" => Ok(SelectorPolicy::Upper),
            "expected" => Ok(SelectorPolicy::ExpectedDilution),
            _ => {
                if let Some(rest) = s.strip_prefix("blend:") {
                    let lambda: f64 = rest.parse().map_err(|_| {
                        Error::Config(format!("selector: bad blend weight {rest:?}"))
                    })?;
                    let policy = SelectorPolicy::Blend(lambda);
                    policy.validate()?;
                    Ok(policy)
                } else {
                    Err(Error::Config(format!(
                        "selector: expected lower|upper|blend:<lambda>|expected, got {s:?}"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for SelectorPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectorPolicy::Lower => write!(f, "lower"),
            SelectorPolicy::Upper => write!(f, "upper"),
            SelectorPolicy::Blend(l) => write!(f, "blend:{l}"),
            SelectorPolicy::ExpectedDilution => write!(f, "expected"),
        }
    }
}

/// Whether the threshold condition has been met at or before the current
/// step. Monotone along every path: once true it stays true.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdState {
    pub hit: bool,
}

/// A lattice node together with its hit state and realized share price.
///
/// Every node after the first crossing prices at `s_w`; the crossing node
/// itself keeps the quoted policy price that triggered the hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedNode {
    pub node: NodeIndex,
    pub state: ThresholdState,
    pub price: f64,
}

/// Per-step bounds on the traded share position. Doing nothing is always
/// allowed, so the interval must contain zero. Infinite bounds express an
/// unconstrained trader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeLimits {
    pub min: f64,
    pub max: f64,
}

impl TradeLimits {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= 0.0 && 0.0 <= max) {
            return Err(Error::InvalidInput(format!(
                "trade limits must satisfy min <= 0 <= max, got [{min}, {max}]"
            )));
        }
        Ok(TradeLimits { min, max })
    }

    pub fn unconstrained() -> Self {
        TradeLimits {
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.min.is_finite() && self.max.is_finite()
    }
}

/// The hit-augmented price lattice: per node, the pre-hit policy price and
/// the post-hit classical price, with deterministic hit propagation.
///
/// State augmentation doubles each time slice; recombination survives
/// because the price depends only on the node and on whether a hit occurred
/// strictly before the current step.
#[derive(Debug, Clone)]
pub struct AugmentedLattice<'a> {
    surface: &'a WarrantSurface,
    policy: SelectorPolicy,
    /// Price at a node given no hit strictly before it: the policy value at
    /// interior nodes, the undiluted price at maturity.
    fresh_price: Vec<f64>,
    /// Probability that a trade occurs at each step. Reserved for models
    /// with intermittent trading; only the always-trading value 1 is
    /// supported.
    trade_probability: f64,
}

impl<'a> AugmentedLattice<'a> {
    pub fn new(surface: &'a WarrantSurface, policy: SelectorPolicy) -> Result<Self> {
        policy.validate()?;
        let lattice = surface.lattice();
        let n_steps = lattice.spec.n_steps;
        let mut fresh_price = vec![0.0; lattice.node_count()];

        let touch = match policy {
            SelectorPolicy::ExpectedDilution => Some(touch_probabilities(lattice)),
            _ => None,
        };
        for node in lattice.nodes() {
            let i = lattice.storage_index(node);
            let upper = lattice.undiluted(node);
            let lower = surface.stock_price(node);
            fresh_price[i] = if node.t == n_steps {
                // No hit by maturity: warrants lapse, the share trades at
                // the undiluted price.
                upper
            } else {
                let raw = match policy {
                    SelectorPolicy::Lower => lower,
                    SelectorPolicy::Upper => upper,
                    SelectorPolicy::Blend(lambda) => lambda * upper + (1.0 - lambda) * lower,
                    SelectorPolicy::ExpectedDilution => {
                        let p = touch.as_ref().expect("computed above")[i];
                        p * lower + (1.0 - p) * upper
                    }
                };
                raw.clamp(lower, upper)
            };
        }
        Ok(AugmentedLattice {
            surface,
            policy,
            fresh_price,
            trade_probability: 1.0,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        self.surface.lattice()
    }

    pub fn surface(&self) -> &WarrantSurface {
        self.surface
    }

    pub fn policy(&self) -> SelectorPolicy {
        self.policy
    }

    pub fn trade_probability(&self) -> f64 {
        self.trade_probability
    }

    /// Realized price at a node given whether a hit occurred strictly
    /// before the node's step.
    pub fn price(&self, node: NodeIndex, hit_before: bool) -> f64 {
        if hit_before {
            self.surface.stock_price(node)
        } else {
            self.fresh_price[self.lattice().storage_index(node)]
        }
    }

    /// Whether the realized price at this node triggers the threshold.
    /// Maturity never triggers: the condition only matters for trades
    /// strictly before expiry.
    fn triggers(&self, node: NodeIndex, price: f64) -> bool {
        node.t < self.lattice().spec.n_steps && price >= self.lattice().params.threshold
    }

    /// The augmented root.
    pub fn root(&self) -> AugmentedNode {
        let node = NodeIndex::new(0, 0);
        let price = self.price(node, false);
        AugmentedNode {
            node,
            state: ThresholdState {
                hit: self.triggers(node, price),
            },
            price,
        }
    }

    /// Steps an augmented node to one of its children. The child's price is
    /// evaluated with the parent's post-trade hit state; its own state then
    /// absorbs any fresh trigger.
    pub fn evolve(&self, parent: &AugmentedNode, direction: Direction) -> Result<AugmentedNode> {
        let n_steps = self.lattice().spec.n_steps;
        if parent.node.t >= n_steps {
            return Err(Error::InvalidInput(
                "cannot evolve a maturity node".to_string(),
            ));
        }
        let child = match direction {
            Direction::Up => parent.node.up(),
            Direction::Down => parent.node.down(),
        };
        let carried = parent.state.hit;
        let price = self.price(child, carried);
        let hit = carried || self.triggers(child, price);
        Ok(AugmentedNode {
            node: child,
            state: ThresholdState { hit },
            price,
        })
    }

    /// Payoff per warrant at a maturity node: the dilution-adjusted call
    /// payoff if the threshold was hit on the way, zero otherwise.
    pub fn terminal_claim(&self, terminal: &AugmentedNode) -> Result<f64> {
        let lattice = self.lattice();
        if terminal.node.t != lattice.spec.n_steps {
            return Err(Error::InvalidInput(format!(
                "terminal claim requested at t = {}, maturity is {}",
                terminal.node.t, lattice.spec.n_steps
            )));
        }
        if !terminal.state.hit {
            return Ok(0.0);
        }
        warrant_payoff(lattice.value(terminal.node), &lattice.params)
    }

    /// CSV export with columns `t,tau,x,w,s_w,hit,s_wl`: two rows per node,
    /// one for each hit state, in the lattice's fixed node order.
    pub fn to_csv(&self) -> String {
        let lattice = self.lattice();
        let mut out = String::from("t,tau,x,w,s_w,hit,s_wl\n");
        for node in lattice.nodes() {
            for hit in [false, true] {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    node.t,
                    node.tau,
                    fmt_significant(lattice.value(node)),
                    fmt_significant(self.surface.warrant_value(node)),
                    fmt_significant(self.surface.stock_price(node)),
                    hit as u8,
                    fmt_significant(self.price(node, hit))
                ));
            }
        }
        out
    }
}

/// Risk-neutral probability that the undiluted price touches the threshold
/// at some step strictly before maturity, starting from each node.
fn touch_probabilities(lattice: &Lattice) -> Vec<f64> {
    let n_steps = lattice.spec.n_steps;
    let q = lattice.spec.q;
    let threshold = lattice.params.threshold;
    let mut prob = vec![0.0; lattice.node_count()];
    for t in (0..n_steps).rev() {
        for node in lattice.slice(t) {
            let i = lattice.storage_index(node);
            prob[i] = if lattice.undiluted(node) >= threshold {
                1.0
            } else if t + 1 == n_steps {
                0.0
            } else {
                q * prob[lattice.storage_index(node.up())]
                    + (1.0 - q) * prob[lattice.storage_index(node.down())]
            };
        }
    }
    prob
}
