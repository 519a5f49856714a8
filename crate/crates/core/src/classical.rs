//! Classical (threshold-free) warrant valuation on the lattice and the stock
//! price process it implies.
//!
//! The warrant value `w` comes from risk-neutral backward induction of the
//! dilution-adjusted payoff; the traded share price in the presence of `M`
//! classical warrants is then `s_w = (X - M*w) / N`. Issuance proceeds are
//! taken to be outside the firm-value process, so only the exercise proceeds
//! `M*K` appear, discounted, inside the diluted price.

use crate::error::{Error, Result};
use crate::lattice::{fmt_significant, Lattice, NodeIndex};
use crate::market::warrant_payoff;

/// Per-node classical warrant values and the implied share prices.
///
/// A finished surface is immutable; each interior value was produced by a
/// single backward sweep reading only the node's two children.
#[derive(Debug, Clone)]
pub struct WarrantSurface {
    lattice: Lattice,
    w: Vec<f64>,
}

/// Prices the classical warrant at every node by backward induction.
///
/// At the root (and in fact at every node) the result is the dilution
/// fraction `N/(N+M)` of a plain binomial call on the per-share firm value,
/// which backward induction preserves because the terminal payoff already
/// carries that factor.
pub fn price_classical_warrant(lattice: &Lattice) -> WarrantSurface {
    let spec = lattice.spec;
    let n_steps = spec.n_steps;
    let mut w = vec![0.0; lattice.node_count()];

    for node in lattice.slice(n_steps) {
        w[lattice.storage_index(node)] =
            warrant_payoff(lattice.value(node), &lattice.params).expect("lattice values positive");
    }
    let disc = 1.0 / spec.growth;
    for t in (0..n_steps).rev() {
        for node in lattice.slice(t) {
            let up = w[lattice.storage_index(node.up())];
            let down = w[lattice.storage_index(node.down())];
            w[lattice.storage_index(node)] = disc * (spec.q * up + (1.0 - spec.q) * down);
        }
    }

    WarrantSurface {
        lattice: lattice.clone(),
        w,
    }
}

impl WarrantSurface {
    /// The lattice the surface was built on.
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Classical warrant value per warrant at a node.
    pub fn warrant_value(&self, node: NodeIndex) -> f64 {
        self.w[self.lattice.storage_index(node)]
    }

    /// Share price under `M` classical warrants: `(X - M*w) / N`.
    pub fn stock_price(&self, node: NodeIndex) -> f64 {
        let m = self.lattice.params.m_warrants as f64;
        let n = self.lattice.params.n_shares as f64;
        (self.lattice.value(node) - m * self.warrant_value(node)) / n
    }

    /// CSV export with columns `t,tau,x,w,s_w`, same ordering and digit
    /// contract as the lattice export.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tau,x,w,s_w\n");
        for node in self.lattice.nodes() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                node.t,
                node.tau,
                fmt_significant(self.lattice.value(node)),
                fmt_significant(self.warrant_value(node)),
                fmt_significant(self.stock_price(node))
            ));
        }
        out
    }
}

/// Share price under classical warrants at one node.
///
/// In any subtree where exercise is certain this coincides with the diluted
/// price `(X + D*M*K) / (N+M)`.
pub fn stock_price_under_warrants(surface: &WarrantSurface, node: NodeIndex) -> Result<f64> {
    if !surface.lattice.contains(node) {
        return Err(Error::NodeOutOfRange {
            tau: node.tau,
            t: node.t,
        });
    }
    Ok(surface.stock_price(node))
}
