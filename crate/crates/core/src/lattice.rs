//! Recombining binomial tree for the firm value with the standard
//! exponential uptick geometry and the implied risk-neutral measure.
//!
//! A node is addressed as `(tau, t)` where `tau` is the net number of upticks
//! from the initial level after `t` steps, so `|tau| <= t` and `tau` has the
//! same parity as `t`. Because the downtick is the exact reciprocal of the
//! uptick, the firm value at a node depends on `tau` alone:
//! `X(tau, t) = X0 * u^tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketParams;

/// Geometry of one lattice: step count, step length, tick ratios and the
/// risk-neutral up-probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Number of time steps.
    pub n_steps: usize,
    /// Step length `T / n_steps` in years.
    pub dt: f64,
    /// Uptick ratio.
    pub u: f64,
    /// Downtick ratio, always `1 / u`.
    pub d: f64,
    /// Risk-neutral probability of an uptick.
    pub q: f64,
    /// One-step growth factor `exp(r * dt)`.
    pub growth: f64,
}

/// Lattice node address: time step `t` and net uptick count `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeIndex {
    /// Time-step index, `0..=n_steps`.
    pub t: usize,
    /// Net uptick count, in `{-t, -t+2, ..., t}`.
    pub tau: i64,
}

impl NodeIndex {
    pub fn new(t: usize, tau: i64) -> Self {
        NodeIndex { t, tau }
    }

    /// Child after an uptick.
    pub fn up(&self) -> NodeIndex {
        NodeIndex::new(self.t + 1, self.tau + 1)
    }

    /// Child after a downtick.
    pub fn down(&self) -> NodeIndex {
        NodeIndex::new(self.t + 1, self.tau - 1)
    }

    /// Position of the node within its time slice, counting from the lowest
    /// `tau` upward: `(tau + t) / 2` in `0..=t`.
    pub fn slice_offset(&self) -> usize {
        ((self.tau + self.t as i64) / 2) as usize
    }
}

/// Immutable firm-value lattice. Construction is single-threaded; concurrent
/// readers are safe afterwards.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub params: MarketParams,
}

/// Builds the lattice with the uptick implied by the volatility:
/// `u = exp(sigma * sqrt(T / n_steps))`.
pub fn build_lattice(params: &MarketParams, n_steps: usize) -> Result<Lattice> {
    params.validate_dynamics()?;
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be at least 1".into()));
    }
    let u = (params.sigma * (params.maturity / n_steps as f64).sqrt()).exp();
    build_with_u(params, n_steps, u)
}

/// Builds the lattice with an explicitly chosen uptick ratio, bypassing the
/// volatility link. Used to reproduce trees whose uptick is stated directly.
pub fn build_lattice_with_uptick(params: &MarketParams, n_steps: usize, u: f64) -> Result<Lattice> {
    params.validate_dynamics()?;
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be at least 1".into()));
    }
    if !(u > 1.0) || !u.is_finite() {
        return Err(Error::InvalidInput(format!(
            "uptick ratio must exceed 1, got {u}"
        )));
    }
    build_with_u(params, n_steps, u)
}

fn build_with_u(params: &MarketParams, n_steps: usize, u: f64) -> Result<Lattice> {
    let dt = params.maturity / n_steps as f64;
    let d = 1.0 / u;
    let growth = (params.rate * dt).exp();
    if !(d < growth && growth < u) {
        return Err(Error::NoMeasure { u, d, growth });
    }
    let q = (growth - d) / (u - d);
    Ok(Lattice {
        spec: LatticeSpec {
            n_steps,
            dt,
            u,
            d,
            q,
            growth,
        },
        params: *params,
    })
}

impl Lattice {
    /// Firm value at a node: `X0 * u^tau`.
    pub fn value(&self, node: NodeIndex) -> f64 {
        self.params.x0 * self.spec.u.powi(node.tau as i32)
    }

    /// Undiluted share price at a node: `X(tau, t) / N`.
    pub fn undiluted(&self, node: NodeIndex) -> f64 {
        self.value(node) / self.params.n_shares as f64
    }

    /// Diluted share price at a node, discounting the exercise proceeds from
    /// maturity back to the node's time.
    pub fn diluted(&self, node: NodeIndex) -> f64 {
        let n = self.params.n_shares as f64;
        let m = self.params.m_warrants as f64;
        let d = self.discount_to_maturity(node.t);
        (self.value(node) + d * m * self.params.strike) / (n + m)
    }

    /// Discount factor from step `t` to maturity.
    pub fn discount_to_maturity(&self, t: usize) -> f64 {
        (-self.params.rate * (self.spec.n_steps - t) as f64 * self.spec.dt).exp()
    }

    /// Whether the address denotes a node of this lattice.
    pub fn contains(&self, node: NodeIndex) -> bool {
        node.t <= self.spec.n_steps
            && node.tau.unsigned_abs() as usize <= node.t
            && (node.tau + node.t as i64) % 2 == 0
    }

    /// Total number of nodes, `(n+1)(n+2)/2`.
    pub fn node_count(&self) -> usize {
        (self.spec.n_steps + 1) * (self.spec.n_steps + 2) / 2
    }

    /// Nodes of one time slice in ascending `tau` order.
    pub fn slice(&self, t: usize) -> impl Iterator<Item = NodeIndex> {
        (0..=t).map(move |j| NodeIndex::new(t, 2 * j as i64 - t as i64))
    }

    /// All nodes, time-major with `tau` ascending inside each slice. This
    /// order is fixed so that exports are reproducible byte for byte.
    pub fn nodes(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        (0..=self.spec.n_steps).flat_map(|t| self.slice(t))
    }

    /// Storage index for per-node arrays laid out in [`Lattice::nodes`] order.
    pub fn storage_index(&self, node: NodeIndex) -> usize {
        node.t * (node.t + 1) / 2 + node.slice_offset()
    }

    /// CSV export with columns `t,tau,x_value`, one row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tau,x_value\n");
        for node in self.nodes() {
            out.push_str(&format!(
                "{},{},{}\n",
                node.t,
                node.tau,
                fmt_significant(self.value(node))
            ));
        }
        out
    }
}

/// Formats a value with 12 significant digits in exponent notation.
pub(crate) fn fmt_significant(v: f64) -> String {
    format!("{v:.11e}")
}

/// One-step expectation under the risk-neutral measure:
/// `q * f(up child) + (1 - q) * f(down child)`.
pub fn risk_neutral_expectation<F>(lattice: &Lattice, node: NodeIndex, f: F) -> Result<f64>
where
    F: Fn(NodeIndex) -> f64,
{
    if !lattice.contains(node) {
        return Err(Error::NodeOutOfRange {
            tau: node.tau,
            t: node.t,
        });
    }
    if node.t >= lattice.spec.n_steps {
        return Err(Error::InvalidInput(format!(
            "node at t = {} is terminal; expectation needs children",
            node.t
        )));
    }
    let q = lattice.spec.q;
    Ok(q * f(node.up()) + (1.0 - q) * f(node.down()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig_params() -> MarketParams {
        MarketParams::new(1000.0, 10, 3, 95.0, 108.0, 2.0, 0.3, 0.0).unwrap()
    }

    #[test]
    fn explicit_uptick_two_steps_extreme_nodes() {
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        assert_eq!(lat.node_count(), 6);
        assert_eq!(lat.value(NodeIndex::new(0, 0)), 1000.0);
        assert!((lat.value(NodeIndex::new(2, 2)) - 1210.0).abs() < 1e-9);
        assert!((lat.value(NodeIndex::new(2, -2)) - 1000.0 / 1.21).abs() < 1e-9);
    }

    #[test]
    fn vanishing_volatility_collapses_children_to_root_value() {
        let params = MarketParams::new(1000.0, 10, 3, 95.0, 108.0, 1.0, 1e-8, 0.0).unwrap();
        let lat = build_lattice(&params, 1).unwrap();
        assert!((lat.value(NodeIndex::new(1, 1)) - 1000.0).abs() < 1e-4);
        assert!((lat.value(NodeIndex::new(1, -1)) - 1000.0).abs() < 1e-4);
    }

    #[test]
    fn uptick_from_volatility_formula() {
        let params = MarketParams::new(1000.0, 10, 4, 95.0, 190.0, 5.0, 0.4, 0.0).unwrap();
        let lat = build_lattice(&params, 135).unwrap();
        let expected = (0.4f64 * (5.0f64 / 135.0).sqrt()).exp();
        assert_eq!(lat.spec.u, expected);
        assert!((lat.spec.u - 1.0800207).abs() < 1e-6);
    }

    #[test]
    fn downtick_is_exact_reciprocal_and_value_depends_on_tau_only() {
        let lat = build_lattice(&fig_params(), 7).unwrap();
        assert_eq!(lat.spec.d, 1.0 / lat.spec.u);
        // The same tau reached along different paths gives the same value by
        // construction, since value is a function of tau alone.
        let a = lat.value(NodeIndex::new(5, 1));
        let b = lat.value(NodeIndex::new(7, 1));
        assert_eq!(a, b);
    }

    #[test]
    fn risk_neutral_probability_matches_hand_value() {
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        assert!((lat.spec.q - 10.0 / 21.0).abs() < 1e-12);
        assert!((lat.spec.q - 0.47619).abs() < 1e-5);
    }

    #[test]
    fn expectation_over_terminal_undiluted_prices_reproduces_parent() {
        // Children of the upper depth-1 node carry undiluted prices 121 and
        // 100; under q the expectation is exactly the parent's 110.
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        let e = risk_neutral_expectation(&lat, NodeIndex::new(1, 1), |c| lat.undiluted(c)).unwrap();
        assert!((e - 110.0).abs() < 1e-6);
    }

    #[test]
    fn expectation_over_terminal_diluted_prices() {
        // q*115 + (1-q)*(1285/13) = 1385/13.
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        let e = risk_neutral_expectation(&lat, NodeIndex::new(1, 1), |c| lat.diluted(c)).unwrap();
        assert!((e - 1385.0 / 13.0).abs() < 1e-9);
        assert!((e - 106.54).abs() < 0.05);
    }

    #[test]
    fn discounted_firm_value_is_a_martingale_everywhere() {
        let params = MarketParams::new(1000.0, 10, 4, 95.0, 190.0, 5.0, 0.4, 0.07).unwrap();
        let lat = build_lattice(&params, 30).unwrap();
        for t in 0..30 {
            for node in lat.slice(t) {
                let e = risk_neutral_expectation(&lat, node, |c| lat.value(c)).unwrap();
                let target = lat.spec.growth * lat.value(node);
                assert!(
                    (e - target).abs() <= 1e-9 * target.abs(),
                    "martingale violated at {node:?}"
                );
            }
        }
    }

    #[test]
    fn expectation_rejects_terminal_node() {
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        assert!(risk_neutral_expectation(&lat, NodeIndex::new(2, 0), |_| 0.0).is_err());
        assert!(risk_neutral_expectation(&lat, NodeIndex::new(1, 2), |_| 0.0).is_err());
    }

    #[test]
    fn measure_existence_failure_reports_triple() {
        // High rate over a long step pushes the growth factor above the uptick.
        let params = MarketParams::new(1000.0, 10, 3, 95.0, 108.0, 1.0, 0.1, 0.5).unwrap();
        match build_lattice(&params, 1) {
            Err(Error::NoMeasure { u, d, growth }) => {
                assert!(growth > u);
                assert!(d < 1.0);
            }
            other => panic!("expected NoMeasure, got {other:?}"),
        }
    }

    #[test]
    fn csv_export_has_header_and_twelve_significant_digits() {
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        let csv = lat.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,tau,x_value");
        let first = lines.next().unwrap();
        assert_eq!(first, format!("0,0,{}", fmt_significant(1000.0)));
        assert_eq!(csv.lines().count(), 1 + lat.node_count());
        // 12 significant digits = 11 digits after the decimal point.
        assert!(first.contains("1.00000000000e3"));
    }

    #[test]
    fn node_enumeration_is_time_major_tau_ascending() {
        let lat = build_lattice_with_uptick(&fig_params(), 2, 1.1).unwrap();
        let order: Vec<(usize, i64)> = lat.nodes().map(|n| (n.t, n.tau)).collect();
        assert_eq!(
            order,
            vec![(0, 0), (1, -1), (1, 1), (2, -2), (2, 0), (2, 2)]
        );
        for (i, node) in lat.nodes().enumerate() {
            assert_eq!(lat.storage_index(node), i);
        }
    }

    proptest! {
        #[test]
        fn martingale_property_for_random_parameters(
            sigma in 0.05f64..0.8,
            r in 0.0f64..0.1,
            n_steps in 1usize..40,
            x0 in 10.0f64..1e6
        ) {
            let params = MarketParams {
                x0, n_shares: 10, m_warrants: 3, strike: 95.0,
                threshold: f64::MAX, maturity: 2.0, sigma, rate: r,
            };
            // Skip draws where the growth factor escapes the tick range.
            let dt = params.maturity / n_steps as f64;
            prop_assume!(r * dt < sigma * dt.sqrt());
            let lat = build_lattice(&params, n_steps).unwrap();
            prop_assert!(lat.spec.q > 0.0 && lat.spec.q < 1.0);
            let node = NodeIndex::new(0, 0);
            let e = risk_neutral_expectation(&lat, node, |c| lat.value(c)).unwrap();
            let target = lat.spec.growth * lat.value(node);
            prop_assert!((e - target).abs() <= 1e-9 * target);
        }
    }
}
