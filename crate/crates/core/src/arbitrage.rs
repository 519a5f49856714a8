//! No-martingale certification for the threshold-warrant stock price.
//!
//! With threshold warrants outstanding, the traded share price is pinned
//! between the classical-warrant price `s_w` and the undiluted price `s`.
//! Once the traded price reaches the threshold `L`, the price must follow
//! `s_w` from the next step on. Near maturity those two requirements
//! collide: a node whose undiluted price clears `L` while its
//! classical-warrant price sits below `L` admits no one-step transition
//! probabilities that keep both the firm value and the share price
//! martingales. This module locates such nodes, checks the supporting
//! inequality chain, and emits a machine-checkable certificate.

use serde::Serialize;

use crate::classical::{price_classical_warrant, WarrantSurface};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, build_lattice_with_uptick, Lattice, LatticeSpec, NodeIndex};
use crate::market::MarketParams;

/// Relative tolerance for detecting an exact power-of-u tie in the critical
/// uptick count.
const BOUNDARY_TOL: f64 = 1e-9;

/// Per-node interval that every admissible share price must respect:
/// `[s_w(node), s(node)]`.
#[derive(Debug, Clone)]
pub struct PriceBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
    lattice: Lattice,
}

impl PriceBounds {
    /// Lower bound, the classical-warrant share price.
    pub fn lower(&self, node: NodeIndex) -> f64 {
        self.lower[self.lattice.storage_index(node)]
    }

    /// Upper bound, the undiluted share price.
    pub fn upper(&self, node: NodeIndex) -> f64 {
        self.upper[self.lattice.storage_index(node)]
    }
}

/// Materializes the admissible price interval at every node.
pub fn compute_bounds(lattice: &Lattice, surface: &WarrantSurface) -> Result<PriceBounds> {
    if surface.lattice().spec != lattice.spec || surface.lattice().params != lattice.params {
        return Err(Error::InvalidInput(
            "surface was built on a different lattice".to_string(),
        ));
    }
    let mut lower = vec![0.0; lattice.node_count()];
    let mut upper = vec![0.0; lattice.node_count()];
    for node in lattice.nodes() {
        let i = lattice.storage_index(node);
        lower[i] = surface.stock_price(node);
        upper[i] = lattice.undiluted(node);
        debug_assert!(lower[i] <= upper[i] + 1e-9 * upper[i].abs());
    }
    Ok(PriceBounds {
        lower,
        upper,
        lattice: lattice.clone(),
    })
}

/// The smallest uptick count that lifts the undiluted share price above the
/// threshold, together with the fractional overshoot.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalUpticks {
    /// Minimal uptick count with `X0 * u^m / N > L`.
    pub m: u32,
    /// Fractional part: `m - ln(L*N/X0) / ln(u)`, in `[0, 1)`.
    pub delta_n: f64,
    /// True when `L*N/X0` is an exact power of `u`. The undiluted price then
    /// only ties the threshold at level `m`, so downstream certificates are
    /// inconclusive rather than asserted.
    pub boundary: bool,
}

/// Computes the critical uptick count for a given lattice geometry.
pub fn critical_upticks(params: &MarketParams, spec: &LatticeSpec) -> Result<CriticalUpticks> {
    let s0 = params.initial_undiluted_price();
    if !(params.threshold > s0) {
        return Err(Error::InvalidInput(format!(
            "threshold {} must exceed the initial undiluted price {}",
            params.threshold, s0
        )));
    }
    let raw = (params.threshold / s0).ln() / spec.u.ln();
    let nearest = raw.round();
    let (m, delta_n, boundary) = if (raw - nearest).abs() <= BOUNDARY_TOL * raw.abs().max(1.0) {
        (nearest, 0.0, true)
    } else {
        let m = raw.floor() + 1.0;
        (m, m - raw, false)
    };
    if m < 0.0 || m > u32::MAX as f64 {
        return Err(Error::Numerical(format!(
            "critical uptick count {m} out of range"
        )));
    }
    debug_assert!((0.0..1.0).contains(&delta_n));
    Ok(CriticalUpticks {
        m: m as u32,
        delta_n,
        boundary,
    })
}

/// Identifier of one inequality checked by the certifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    /// One step past the crossing level, the undiluted price after a down
    /// move still exceeds the diluted price after an up move.
    DilutionGap,
    /// The node straddles the threshold: undiluted above, diluted below.
    BoundsStraddle,
    /// The diluted price one further uptick ahead still sits below the
    /// threshold, so a post-hit price cannot keep its conditional mean.
    PostHitBelowThreshold,
    /// At maturity a down move from the top of the examined section lands
    /// back above the threshold while the pre-maturity price was below it.
    TerminalRecross,
    /// The two conditional expectations at a straddling node both miss every
    /// admissible price, under the measure pinned by the firm value.
    ExpectationGap,
}

/// One checked inequality with the node pair and both sides recorded.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityCheck {
    pub id: InequalityId,
    pub node_a: NodeIndex,
    pub node_b: NodeIndex,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the key crossing inequality at level `m` and time `t`:
/// `X0*u^m*d / N  >  (X0*u^(m+1) + D(t+1,T)*M*K) / (N+M)`.
///
/// The left side is the undiluted price one down-move after the crossing
/// node; the right side is the diluted price one up-move after it. With no
/// warrants the right side dominates and the inequality can never hold.
///
/// Requires the subtree rooted at `(m, t)` to exercise with certainty, so
/// that the classical-warrant price there really is the diluted price.
pub fn check_dilution_gap(
    lattice: &Lattice,
    surface: &WarrantSurface,
    m: u32,
    t: usize,
) -> Result<InequalityCheck> {
    let params = &lattice.params;
    let node = NodeIndex::new(t, m as i64);
    let down = NodeIndex::new(t + 1, m as i64 - 1);
    let up = NodeIndex::new(t + 1, m as i64 + 1);
    for probe in [node, down, up] {
        if !lattice.contains(probe) {
            return Err(Error::NodeOutOfRange {
                tau: probe.tau,
                t: probe.t,
            });
        }
    }
    if !certain_exercise(lattice, node) {
        return Err(Error::InvalidInput(format!(
            "subtree at (tau = {m}, t = {t}) does not exercise with certainty"
        )));
    }
    let n = params.n_shares as f64;
    let m_w = params.m_warrants as f64;
    let discount = lattice.discount_to_maturity(t + 1);
    let lhs = lattice.value(down) / n;
    let rhs = (lattice.value(up) + discount * m_w * params.strike) / (n + m_w);
    // Under certain exercise the classical-warrant price equals the diluted
    // price, so the closed form must agree with the surface.
    debug_assert!((surface.stock_price(up) - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    Ok(InequalityCheck {
        id: InequalityId::DilutionGap,
        node_a: down,
        node_b: up,
        lhs,
        rhs,
        holds: lhs > rhs,
    })
}

/// True when every maturity descendant of `node` lies above the aggregate
/// strike `N*K`, i.e. profitable exercise is certain from here.
pub fn certain_exercise(lattice: &Lattice, node: NodeIndex) -> bool {
    let remaining = (lattice.spec.n_steps - node.t) as i64;
    let lowest = NodeIndex::new(lattice.spec.n_steps, node.tau - remaining);
    lattice.value(lowest) > lattice.params.n_shares as f64 * lattice.params.strike
}

/// Row of the uptick-propagation chain at one offset from the crossing node.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OffsetCheck {
    pub offset: usize,
    pub node: NodeIndex,
    /// Undiluted price at the node.
    pub undiluted: f64,
    /// Classical-warrant price at the node (the lower bound).
    pub bound: f64,
    /// Undiluted price exceeds the threshold.
    pub above_threshold: bool,
    /// Lower bound sits below the threshold.
    pub bound_below_threshold: bool,
    /// Lower bound one further uptick ahead, when that node is not terminal.
    pub next_bound: Option<f64>,
    /// Whether that next bound also sits below the threshold.
    pub next_below_threshold: Option<bool>,
}

/// Terminal step of the chain: after the last pre-maturity offset, a down
/// move at maturity lands back above the threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TerminalCheck {
    /// Offset of the last pre-maturity node, `n - t - 1`.
    pub m_prime: usize,
    /// The recross needs at least one offset before maturity.
    pub has_prior_step: bool,
    /// Node reached by the down move at maturity.
    pub recross_node: NodeIndex,
    /// Its undiluted price (the forced no-hit price at maturity).
    pub recross_price: f64,
    /// Recross price exceeds the threshold.
    pub recross_above_threshold: bool,
    /// Classical-warrant price at the top maturity node, recorded for the
    /// transcript; at moderate step counts it may exceed the threshold, in
    /// which case the hit-at-last-step case is settled by the expectation
    /// witnesses rather than by this chain.
    pub top_terminal_bound: f64,
}

/// Result of propagating the crossing argument up the examined section.
#[derive(Debug, Clone, Serialize)]
pub struct UptickChain {
    pub start_time: usize,
    pub offsets: Vec<OffsetCheck>,
    /// Present only when the offsets reach the last pre-maturity slice, so
    /// that the recross argument applies.
    pub terminal: Option<TerminalCheck>,
    /// All straddles hold, all interior next-step bounds sit below the
    /// threshold, and the terminal recross closes the argument.
    pub verified: bool,
}

/// Walks offsets `0..=m_prime` up from the crossing node `(m, t)` and checks
/// the inequality chain on the actual classical-warrant surface.
///
/// For every offset the node's undiluted price must exceed the threshold
/// while its lower bound stays below it; for interior offsets the lower
/// bound one further uptick ahead must stay below the threshold as well
/// (that bound caps the conditional mean after a hit). The final offset is
/// closed by the maturity recross: if no hit happened through the last
/// pre-maturity step, the forced undiluted price after a down move still
/// exceeds the threshold, contradicting any price below it.
///
/// Only the zero-rate market is accepted: the exact algebra multiplies the
/// crossing inequality by uptick powers, which requires unit discounting.
pub fn propagate_upticks(
    lattice: &Lattice,
    surface: &WarrantSurface,
    m: u32,
    t: usize,
    m_prime: usize,
) -> Result<UptickChain> {
    if lattice.params.rate != 0.0 {
        return Err(Error::InvalidInput(
            "uptick propagation requires a zero risk-free rate".to_string(),
        ));
    }
    let n_steps = lattice.spec.n_steps;
    if t + m_prime + 1 > n_steps {
        return Err(Error::InvalidInput(format!(
            "offset range too deep: t + m_prime + 1 = {} exceeds n_steps = {}",
            t + m_prime + 1,
            n_steps
        )));
    }
    let base = NodeIndex::new(t, m as i64);
    if !lattice.contains(base) {
        return Err(Error::NodeOutOfRange {
            tau: base.tau,
            t: base.t,
        });
    }
    let threshold = lattice.params.threshold;

    let mut offsets = Vec::with_capacity(m_prime + 1);
    for k in 0..=m_prime {
        let node = NodeIndex::new(t + k, m as i64 + k as i64);
        let next = NodeIndex::new(t + k + 1, m as i64 + k as i64 + 1);
        let undiluted = lattice.undiluted(node);
        let bound = surface.stock_price(node);
        let next_is_terminal = next.t == n_steps;
        let next_bound = (!next_is_terminal).then(|| surface.stock_price(next));
        offsets.push(OffsetCheck {
            offset: k,
            node,
            undiluted,
            bound,
            above_threshold: undiluted > threshold,
            bound_below_threshold: bound < threshold,
            next_bound,
            next_below_threshold: next_bound.map(|b| b < threshold),
        });
    }

    let last = m_prime;
    let terminal = (t + last + 1 == n_steps).then(|| {
        let top = NodeIndex::new(t + last, m as i64 + last as i64);
        let recross_node = NodeIndex::new(n_steps, top.tau - 1);
        let recross_price = lattice.undiluted(recross_node);
        TerminalCheck {
            m_prime: last,
            has_prior_step: last >= 1,
            recross_node,
            recross_price,
            recross_above_threshold: recross_price > threshold,
            top_terminal_bound: surface.stock_price(NodeIndex::new(n_steps, top.tau + 1)),
        }
    });

    let straddles_ok = offsets
        .iter()
        .all(|o| o.above_threshold && o.bound_below_threshold);
    let interiors_ok = offsets
        .iter()
        .all(|o| o.next_below_threshold.unwrap_or(true));
    let verified = straddles_ok
        && interiors_ok
        && terminal
            .as_ref()
            .map(|term| term.has_prior_step && term.recross_above_threshold)
            .unwrap_or(false);

    Ok(UptickChain {
        start_time: t,
        offsets,
        terminal,
        verified,
    })
}

/// Smallest step count that makes the crossing inequality hold, namely the
/// smallest integer `n` strictly greater than
/// `T / [ ln((N+M) / (N + M*K/L)) / (2*sigma) ]^2`.
///
/// The bound is evaluated in the zero-rate convention (unit discount on the
/// strike proceeds), matching the exact-proof mode of [`propagate_upticks`].
/// With no warrants the bound diverges and the error reports that no finite
/// step count exists.
pub fn minimal_steps(params: &MarketParams) -> Result<u32> {
    params.validate()?;
    if params.m_warrants == 0 {
        return Err(Error::NoFiniteStepCount);
    }
    let n = params.n_shares as f64;
    let m = params.m_warrants as f64;
    let ratio = (n + m) / (n + m * params.strike / params.threshold);
    debug_assert!(ratio > 1.0);
    let bound = params.maturity * (2.0 * params.sigma / ratio.ln()).powi(2);
    if !bound.is_finite() || bound >= u32::MAX as f64 {
        return Err(Error::Numerical(format!(
            "step-count bound {bound} is not representable"
        )));
    }
    Ok(bound.floor() as u32 + 1)
}

/// One straddling node at the last pre-maturity slice whose two conditional
/// expectations both miss every admissible price.
///
/// Under the measure pinned by the firm-value martingale, a hit at the node
/// forces next-step prices onto the classical-warrant surface with mean
/// `e_hit`, while no hit forces maturity prices onto the undiluted surface
/// with mean `e_no_hit`. The node witnesses the violation when `e_hit` falls
/// below the one-step growth of the threshold while the undiluted price sits
/// at or above the threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpectationWitness {
    pub node: NodeIndex,
    /// Conditional mean of the maturity price if no hit has occurred.
    pub e_no_hit: f64,
    /// Conditional mean of the maturity price after a hit.
    pub e_hit: f64,
    /// Admissible interval at the node.
    pub lower: f64,
    pub upper: f64,
}

/// Options controlling [`certify_no_martingale`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CertifyOptions {
    /// Fix the uptick ratio directly instead of deriving it from the
    /// volatility. Also waives the minimal-step-count gate, since the bound
    /// assumes the volatility link.
    pub u_override: Option<f64>,
    /// Run below the sufficient step count for exploratory purposes.
    pub force: bool,
}

/// Machine-checkable witness that the threshold-warrant share price admits
/// no martingale measure consistent with the firm value.
#[derive(Debug, Clone, Serialize)]
pub struct ArbitrageCertificate {
    pub n_steps: usize,
    pub u: f64,
    pub q: f64,
    pub m: u32,
    pub delta_n: f64,
    /// Exact power-of-u tie; see [`CriticalUpticks::boundary`]. A boundary
    /// certificate is inconclusive and never asserts a violation.
    pub boundary: bool,
    /// First time at which the crossing node exists inside a subtree of
    /// certain exercise.
    pub t_star: Option<usize>,
    /// Inclusive offset range checked by the chain, when it ran.
    pub m_prime_range: Option<[usize; 2]>,
    /// Crossing inequality at `t_star`.
    pub dilution_gap: Option<InequalityCheck>,
    /// Propagated chain at the latest admissible start time.
    pub chain: Option<UptickChain>,
    /// Inequalities established, with node pairs and both sides.
    pub violated: Vec<InequalityCheck>,
    /// Expectation witnesses at the last pre-maturity slice.
    pub witnesses: Vec<ExpectationWitness>,
    /// True when at least one expectation witness certifies the violation
    /// and the critical level is not a boundary tie.
    pub holds: bool,
}

/// Builds the full certificate for the given market at the given depth.
///
/// Unless waived, the step count must reach [`minimal_steps`]; markets
/// without warrants skip the gate because no finite count exists (and no
/// violation either).
pub fn certify_no_martingale(
    params: &MarketParams,
    n_steps: usize,
    opts: &CertifyOptions,
) -> Result<ArbitrageCertificate> {
    let lattice = match opts.u_override {
        Some(u) => build_lattice_with_uptick(params, n_steps, u)?,
        None => build_lattice(params, n_steps)?,
    };
    if !opts.force && opts.u_override.is_none() && params.m_warrants > 0 {
        let n_min = minimal_steps(params)? as usize;
        if n_steps < n_min {
            return Err(Error::InvalidInput(format!(
                "n_steps = {n_steps} is below the sufficient count {n_min}; pass force to run anyway"
            )));
        }
    }
    let surface = price_classical_warrant(&lattice);
    certify_on_surface(&lattice, &surface)
}

/// Certificate construction on an already-built surface.
pub fn certify_on_surface(
    lattice: &Lattice,
    surface: &WarrantSurface,
) -> Result<ArbitrageCertificate> {
    let params = &lattice.params;
    let spec = lattice.spec;
    let n_steps = spec.n_steps;
    let threshold = params.threshold;
    let crit = critical_upticks(params, &spec)?;
    let m = crit.m as i64;

    // First time the crossing node exists inside a certain-exercise subtree.
    // The threshold window excludes maturity, so stop one slice short.
    let mut t_star = None;
    if m >= 1 {
        let mut t = (m as usize).max(1);
        while t < n_steps {
            let node = NodeIndex::new(t, m);
            if lattice.contains(node) && certain_exercise(lattice, node) {
                t_star = Some(t);
                break;
            }
            t += 1;
        }
    }

    let dilution_gap = t_star.and_then(|t| check_dilution_gap(lattice, surface, crit.m, t).ok());

    // Chain at the latest start time that still leaves a pre-maturity step,
    // keeping the parity of the crossing level.
    let chain = match (t_star, params.rate == 0.0) {
        (Some(ts), true) if n_steps >= 2 => {
            let mut t_chain = n_steps - 2;
            if (t_chain as i64 - m).rem_euclid(2) != 0 {
                t_chain = t_chain.saturating_sub(1);
            }
            if t_chain >= ts {
                propagate_upticks(lattice, surface, crit.m, t_chain, n_steps - 1 - t_chain).ok()
            } else {
                None
            }
        }
        _ => None,
    };
    let m_prime_range = chain.as_ref().map(|c| [0, c.offsets.len() - 1]);

    // Expectation witnesses on the last pre-maturity slice. A hit there pins
    // next-step prices to the classical surface; no hit pins them to the
    // undiluted maturity prices.
    let mut witnesses = Vec::new();
    if n_steps >= 2 {
        let t = n_steps - 1;
        for node in lattice.slice(t) {
            let upper = lattice.undiluted(node);
            let lower = surface.stock_price(node);
            if !(lower < threshold && upper >= threshold) {
                continue;
            }
            let q = spec.q;
            let e_hit =
                q * surface.stock_price(node.up()) + (1.0 - q) * surface.stock_price(node.down());
            let e_no_hit =
                q * lattice.undiluted(node.up()) + (1.0 - q) * lattice.undiluted(node.down());
            let hit_lo = spec.growth * threshold.max(lower);
            let hit_hi = spec.growth * upper;
            if e_hit < hit_lo || e_hit > hit_hi {
                witnesses.push(ExpectationWitness {
                    node,
                    e_no_hit,
                    e_hit,
                    lower,
                    upper,
                });
            }
        }
    }

    let mut violated = Vec::new();
    if let Some(gap) = dilution_gap {
        if gap.holds {
            violated.push(gap);
        }
    }
    if let Some(chain) = &chain {
        for row in &chain.offsets {
            if row.above_threshold && row.bound_below_threshold {
                violated.push(InequalityCheck {
                    id: InequalityId::BoundsStraddle,
                    node_a: row.node,
                    node_b: row.node,
                    lhs: row.undiluted,
                    rhs: row.bound,
                    holds: true,
                });
            }
            if let (Some(bound), Some(true)) = (row.next_bound, row.next_below_threshold) {
                violated.push(InequalityCheck {
                    id: InequalityId::PostHitBelowThreshold,
                    node_a: row.node,
                    node_b: NodeIndex::new(row.node.t + 1, row.node.tau + 1),
                    lhs: threshold,
                    rhs: bound,
                    holds: true,
                });
            }
        }
        if let Some(term) = &chain.terminal {
            if term.has_prior_step && term.recross_above_threshold {
                violated.push(InequalityCheck {
                    id: InequalityId::TerminalRecross,
                    node_a: term.recross_node,
                    node_b: term.recross_node,
                    lhs: term.recross_price,
                    rhs: threshold,
                    holds: true,
                });
            }
        }
    }
    for w in &witnesses {
        violated.push(InequalityCheck {
            id: InequalityId::ExpectationGap,
            node_a: w.node,
            node_b: w.node,
            lhs: w.e_hit,
            rhs: spec.growth * threshold,
            holds: true,
        });
    }

    let holds = !witnesses.is_empty() && !crit.boundary;

    Ok(ArbitrageCertificate {
        n_steps,
        u: spec.u,
        q: spec.q,
        m: crit.m,
        delta_n: crit.delta_n,
        boundary: crit.boundary,
        t_star,
        m_prime_range,
        dilution_gap,
        chain,
        violated,
        witnesses,
        holds,
    })
}

impl ArbitrageCertificate {
    /// JSON form of the certificate.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Human-readable proof transcript citing the inequality identifiers.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "lattice: {} steps, uptick {:.6}, risk-neutral up-probability {:.6}\n",
            self.n_steps, self.u, self.q
        ));
        out.push_str(&format!(
            "critical upticks m = {} (fractional overshoot {:.6}{})\n",
            self.m,
            self.delta_n,
            if self.boundary {
                ", exact tie: inconclusive"
            } else {
                ""
            }
        ));
        match self.t_star {
            Some(t) => out.push_str(&format!(
                "first certain-exercise crossing at t = {t} (threshold level tau = {})\n",
                self.m
            )),
            None => out.push_str("no certain-exercise crossing node at this depth\n"),
        }
        if let Some(gap) = &self.dilution_gap {
            out.push_str(&format!(
                "dilution_gap at ({}, t={}) vs ({}, t={}): {:.6} {} {:.6}\n",
                gap.node_a.tau,
                gap.node_a.t,
                gap.node_b.tau,
                gap.node_b.t,
                gap.lhs,
                if gap.holds { ">" } else { "<=" },
                gap.rhs
            ));
        }
        if let Some(chain) = &self.chain {
            out.push_str(&format!(
                "uptick chain from t = {}: {}\n",
                chain.start_time,
                if chain.verified {
                    "verified"
                } else {
                    "not verified"
                }
            ));
            for row in &chain.offsets {
                out.push_str(&format!(
                    "  offset {}: bounds_straddle {} (undiluted {:.4}, bound {:.4})",
                    row.offset,
                    if row.above_threshold && row.bound_below_threshold {
                        "holds"
                    } else {
                        "fails"
                    },
                    row.undiluted,
                    row.bound
                ));
                if let (Some(b), Some(ok)) = (row.next_bound, row.next_below_threshold) {
                    out.push_str(&format!(
                        ", post_hit_below_threshold {} (next bound {:.4})",
                        if ok { "holds" } else { "fails" },
                        b
                    ));
                }
                out.push('\n');
            }
            match &chain.terminal {
                Some(term) => out.push_str(&format!(
                    "  terminal_recross {}: price {:.4} after a down move at maturity\n",
                    if term.has_prior_step && term.recross_above_threshold {
                        "holds"
                    } else {
                        "fails"
                    },
                    term.recross_price
                )),
                None => out.push_str("  chain stops short of maturity; no terminal recross\n"),
            }
        }
        for w in &self.witnesses {
            out.push_str(&format!(
                "expectation_gap at (tau = {}, t = {}): admissible [{:.4}, {:.4}], e_no_hit {:.4}, e_hit {:.4}\n",
                w.node.tau, w.node.t, w.lower, w.upper, w.e_no_hit, w.e_hit
            ));
        }
        out.push_str(&format!(
            "verdict: the share price {} support a martingale measure\n",
            if self.holds { "cannot" } else { "may" }
        ));
        out
    }
}
