//! Deliberately naive reference implementations used to validate the other
//! modules at desk scale. Oracle results are authoritative in cross-checks:
//! disagreement beyond stated tolerances fails the build.

use crate::classical::WarrantSurface;
use crate::error::{Error, Result};
use crate::indifference::{wealth_step, Claim, MarketTree, UtilityFunction};
use crate::lattice::{Lattice, NodeIndex};
use crate::numerics::bisect_min_wealth;
use crate::threshold::Direction;

/// Hard cap on full-path enumeration depth.
const MAX_PATH_STEPS: usize = 12;
/// Hard cap on the number of enumerated trading strategies.
const MAX_STRATEGIES: u64 = 2_000_000;

/// One root-to-maturity path with its probability under a supplied measure.
#[derive(Debug, Clone)]
pub struct PathInfo {
    pub steps: Vec<Direction>,
    pub probability: f64,
    pub terminal: NodeIndex,
}

/// Enumerates all `2^n` paths of the lattice under up-probability `p_up`.
pub fn enumerate_paths(lattice: &Lattice, p_up: f64) -> Result<Vec<PathInfo>> {
    let n = lattice.spec.n_steps;
    if n > MAX_PATH_STEPS {
        return Err(Error::CapExceeded(format!(
            "path enumeration supports at most {MAX_PATH_STEPS} steps, got {n}"
        )));
    }
    if !(p_up > 0.0 && p_up < 1.0) {
        return Err(Error::InvalidInput(format!(
            "up-probability must lie in (0, 1), got {p_up}"
        )));
    }
    let mut paths = Vec::with_capacity(1 << n);
    for mask in 0u64..(1 << n) {
        let mut tau = 0i64;
        let mut probability = 1.0;
        let mut steps = Vec::with_capacity(n);
        for bit in 0..n {
            if mask & (1 << bit) != 0 {
                steps.push(Direction::Up);
                tau += 1;
                probability *= p_up;
            } else {
                steps.push(Direction::Down);
                tau -= 1;
                probability *= 1.0 - p_up;
            }
        }
        paths.push(PathInfo {
            steps,
            probability,
            terminal: NodeIndex::new(n, tau),
        });
    }
    Ok(paths)
}

/// Expectation of `f` at maturity conditional on passing through `node`,
/// computed from the full path enumeration.
pub fn conditional_terminal_expectation<F>(
    lattice: &Lattice,
    p_up: f64,
    node: NodeIndex,
    f: F,
) -> Result<f64>
where
    F: Fn(NodeIndex) -> f64,
{
    if !lattice.contains(node) {
        return Err(Error::NodeOutOfRange {
            tau: node.tau,
            t: node.t,
        });
    }
    let paths = enumerate_paths(lattice, p_up)?;
    let mut mass = 0.0;
    let mut sum = 0.0;
    for path in &paths {
        let mut tau = 0i64;
        for step in path.steps.iter().take(node.t) {
            tau += match step {
                Direction::Up => 1,
                Direction::Down => -1,
            };
        }
        if tau == node.tau {
            mass += path.probability;
            sum += path.probability * f(path.terminal);
        }
    }
    if mass <= 0.0 {
        return Err(Error::Numerical(format!(
            "no path mass through (tau = {}, t = {})",
            node.tau, node.t
        )));
    }
    Ok(sum / mass)
}

/// Discounted risk-neutral expectation of a terminal payoff, conditional on
/// standing at `node`: the backward-induction-free valuation route.
pub fn discounted_payoff_expectation<F>(
    lattice: &Lattice,
    node: NodeIndex,
    payoff: F,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !lattice.contains(node) {
        return Err(Error::NodeOutOfRange {
            tau: node.tau,
            t: node.t,
        });
    }
    let remaining = lattice.spec.n_steps - node.t;
    if remaining > 20 {
        return Err(Error::CapExceeded(format!(
            "remaining depth {remaining} exceeds the enumeration cap of 20"
        )));
    }
    let q = lattice.spec.q;
    let mut expectation = 0.0;
    for mask in 0u64..(1 << remaining) {
        let ups = mask.count_ones() as i64;
        let tau = node.tau + 2 * ups - remaining as i64;
        let prob = q.powi(ups as i32) * (1.0 - q).powi((remaining as i64 - ups) as i32);
        expectation += prob * payoff(lattice.value(NodeIndex::new(lattice.spec.n_steps, tau)));
    }
    Ok(lattice.discount_to_maturity(node.t) * expectation)
}

/// Plain binomial call value by the combinatorial terminal sum, independent
/// of any backward induction.
pub fn crr_call_price(s0: f64, strike: f64, u: f64, q: f64, growth: f64, n_steps: usize) -> f64 {
    if n_steps == 0 {
        return (s0 - strike).max(0.0);
    }
    let d = 1.0 / u;
    let n = n_steps as i32;
    // Walk the binomial weights C(n, j) q^j (1-q)^(n-j) incrementally.
    let mut weight = (1.0 - q).powi(n);
    let mut sum = 0.0;
    for j in 0..=n_steps {
        let terminal = s0 * u.powi(j as i32) * d.powi(n - j as i32);
        sum += weight * (terminal - strike).max(0.0);
        if j < n_steps {
            weight *= (n_steps - j) as f64 / (j + 1) as f64 * q / (1.0 - q);
        }
    }
    sum / growth.powi(n)
}

struct PathPrecomp {
    decisions: Vec<usize>,
    prices: Vec<f64>,
    probability: f64,
    terminal_state: usize,
}

/// Indifference price by exhaustive search over every trading strategy on a
/// finite position grid, with the same wealth bisection as the engine.
///
/// A strategy assigns one grid position to each reachable `(time, state)`
/// pair. All `|grid|^states` assignments are evaluated over all `2^n`
/// paths. Limited to four steps and two million strategies.
pub fn brute_indifference<T: MarketTree>(
    tree: &T,
    claim: &Claim,
    utility: UtilityFunction,
    p_up: f64,
    delta_grid: &[f64],
    tol_w: f64,
) -> Result<f64> {
    let n = tree.n_steps();
    if n > 4 {
        return Err(Error::CapExceeded(format!(
            "brute-force indifference supports at most 4 steps, got {n}"
        )));
    }
    if delta_grid.is_empty() {
        return Err(Error::InvalidInput("empty position grid".to_string()));
    }
    if claim.len() != tree.state_count(n) {
        return Err(Error::InvalidInput(
            "claim length does not match the tree".to_string(),
        ));
    }

    // Reachable decision states, found by a forward sweep from the root.
    let mut reachable: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut frontier = vec![0usize];
    for (t, slot) in reachable.iter_mut().enumerate() {
        *slot = frontier.clone();
        let mut next = Vec::new();
        for &state in &frontier {
            for dir in [Direction::Up, Direction::Down] {
                let child = tree.child(t, state, dir);
                if !next.contains(&child) {
                    next.push(child);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    let mut decision_index = vec![std::collections::HashMap::new(); n];
    let mut n_decisions = 0usize;
    for (t, states) in reachable.iter().enumerate() {
        for &s in states {
            decision_index[t].insert(s, n_decisions);
            n_decisions += 1;
        }
    }
    let n_strategies = (delta_grid.len() as u64)
        .checked_pow(n_decisions as u32)
        .unwrap_or(u64::MAX);
    if n_strategies > MAX_STRATEGIES {
        return Err(Error::CapExceeded(format!(
            "{} strategies over {} decision states exceed the cap of {MAX_STRATEGIES}",
            n_strategies, n_decisions
        )));
    }

    // Paths precomputed once: visited decision indices, prices, probability.
    let r = tree.step_rate();
    let mut paths = Vec::with_capacity(1 << n);
    #[allow(clippy::needless_range_loop)]
    for mask in 0u32..(1 << n) {
        let mut state = 0usize;
        let mut decisions = Vec::with_capacity(n);
        let mut prices = Vec::with_capacity(n + 1);
        let mut probability = 1.0;
        for t in 0..n {
            decisions.push(decision_index[t][&state]);
            prices.push(tree.price(t, state));
            let dir = if mask & (1 << t) != 0 {
                probability *= p_up;
                Direction::Up
            } else {
                probability *= 1.0 - p_up;
                Direction::Down
            };
            state = tree.child(t, state, dir);
        }
        prices.push(tree.price(n, state));
        paths.push(PathPrecomp {
            decisions,
            prices,
            probability,
            terminal_state: state,
        });
    }

    let expected_utility = |w0: f64, claim: Option<&Claim>| -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut strategy = vec![0usize; n_decisions];
        loop {
            let mut value = 0.0;
            for path in &paths {
                let mut w = w0;
                for k in 0..n {
                    let delta = delta_grid[strategy[path.decisions[k]]];
                    w = wealth_step(w, delta, path.prices[k], path.prices[k + 1], r);
                }
                let payout = claim.map_or(0.0, |c| c.payoff(path.terminal_state));
                value += path.probability * utility.evaluate(w + payout);
            }
            if value > best {
                best = value;
            }
            // Odometer increment over the strategy space.
            let mut pos = 0;
            loop {
                if pos == n_decisions {
                    return best;
                }
                strategy[pos] += 1;
                if strategy[pos] < delta_grid.len() {
                    break;
                }
                strategy[pos] = 0;
                pos += 1;
            }
        }
    };

    let target = expected_utility(0.0, Some(claim));
    let payoff_lo = (0..claim.len())
        .map(|s| claim.payoff(s))
        .fold(0.0, f64::min);
    let payoff_hi = (0..claim.len())
        .map(|s| claim.payoff(s))
        .fold(0.0, f64::max);
    bisect_min_wealth(
        &|w| expected_utility(w, None),
        target,
        payoff_lo - 2.0,
        payoff_hi + 2.0,
        tol_w,
    )
}

/// Local martingale feasibility at one pre-maturity node.
#[derive(Debug, Clone, Copy)]
pub struct NodeFeasibility {
    pub node: NodeIndex,
    /// The hit scenario admits a price in `[max(L, s_w), s]` matching its
    /// conditional expectation.
    pub hit_feasible: bool,
    /// The no-hit scenario admits a price in `[s_w, L)` matching its
    /// conditional expectation.
    pub no_hit_feasible: bool,
    pub feasible: bool,
}

/// Feasibility verdict over a set of witness nodes.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub per_node: Vec<NodeFeasibility>,
    /// True when every node admits some locally consistent assignment.
    pub feasible: bool,
}

/// Searches one-step transition probabilities making both the firm value
/// and a bounded share price martingales at the given last-pre-maturity
/// nodes.
///
/// The firm-value leg is linear in the up-probability and pins it uniquely,
/// so the search reduces to interval checks on the share-price leg: after a
/// hit the maturity prices sit on the classical surface, without one they
/// are the undiluted prices.
pub fn martingale_feasibility(
    surface: &WarrantSurface,
    threshold: f64,
    nodes: &[NodeIndex],
) -> Result<FeasibilityReport> {
    let lattice = surface.lattice();
    let n = lattice.spec.n_steps;
    let growth = lattice.spec.growth;
    let mut per_node = Vec::with_capacity(nodes.len());
    for &node in nodes {
        if !lattice.contains(node) || node.t + 1 != n {
            return Err(Error::InvalidInput(format!(
                "feasibility witness (tau = {}, t = {}) must sit one step before maturity",
                node.tau, node.t
            )));
        }
        let x_up = lattice.value(node.up());
        let x_down = lattice.value(node.down());
        // Unique probability keeping the firm value a martingale.
        let p = (growth * lattice.value(node) - x_down) / (x_up - x_down);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Numerical(format!(
                "firm-value leg admits no probability in (0, 1) at (tau = {}, t = {})",
                node.tau, node.t
            )));
        }
        let upper = lattice.undiluted(node);
        let lower = surface.stock_price(node);
        let tol = 1e-9 * upper.max(1.0);

        let e_hit =
            p * surface.stock_price(node.up()) + (1.0 - p) * surface.stock_price(node.down());
        let hit_lo = threshold.max(lower);
        let hit_candidate = e_hit / growth;
        let hit_feasible =
            upper >= threshold && hit_candidate >= hit_lo - tol && hit_candidate <= upper + tol;

        let e_no_hit =
            p * lattice.undiluted(node.up()) + (1.0 - p) * lattice.undiluted(node.down());
        let no_hit_candidate = e_no_hit / growth;
        let no_hit_feasible = lower < threshold
            && no_hit_candidate >= lower - tol
            && no_hit_candidate < threshold
            && no_hit_candidate <= upper + tol;

        let feasible = hit_feasible || no_hit_feasible;
        per_node.push(NodeFeasibility {
            node,
            hit_feasible,
            no_hit_feasible,
            feasible,
        });
    }
    let feasible = per_node.iter().all(|n| n.feasible);
    Ok(FeasibilityReport { per_node, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::price_classical_warrant;
    use crate::indifference::{
        indifference_price, DeltaSearch, EngineConfig, Interpolation, SimpleBinomial,
    };
    use crate::lattice::{build_lattice, build_lattice_with_uptick};
    use crate::market::MarketParams;

    fn two_period() -> MarketParams {
        MarketParams::new(1000.0, 10, 3, 95.0, 108.0, 2.0, 0.3, 0.0).unwrap()
    }

    #[test]
    fn one_step_paths_carry_the_two_probabilities() {
        let params = two_period();
        let lat = build_lattice_with_uptick(&params, 1, 1.1).unwrap();
        let paths = enumerate_paths(&lat, 0.3).unwrap();
        assert_eq!(paths.len(), 2);
        let up = paths.iter().find(|p| p.terminal.tau == 1).unwrap();
        let down = paths.iter().find(|p| p.terminal.tau == -1).unwrap();
        assert!((up.probability - 0.3).abs() < 1e-15);
        assert!((down.probability - 0.7).abs() < 1e-15);
    }

    #[test]
    fn conditional_expectations_reproduce_the_two_period_display() {
        let params = two_period();
        let lat = build_lattice_with_uptick(&params, 2, 1.1).unwrap();
        let node = NodeIndex::new(1, 1);
        let q = lat.spec.q;
        let undiluted =
            conditional_terminal_expectation(&lat, q, node, |t| lat.undiluted(t)).unwrap();
        assert!((undiluted - 110.0).abs() < 1e-9);
        let diluted = conditional_terminal_expectation(&lat, q, node, |t| lat.diluted(t)).unwrap();
        assert!((diluted - 106.54).abs() < 0.05);
        assert!((diluted - 1385.0 / 13.0).abs() < 1e-9);
    }

    #[test]
    fn discounted_terminal_firm_value_recovers_the_root() {
        let params = MarketParams::new(1000.0, 10, 3, 95.0, 150.0, 2.0, 0.4, 0.06).unwrap();
        let lat = build_lattice(&params, 10).unwrap();
        let paths = enumerate_paths(&lat, lat.spec.q).unwrap();
        let discounted: f64 = paths
            .iter()
            .map(|p| p.probability * lat.value(p.terminal))
            .sum::<f64>()
            * lat.discount_to_maturity(0);
        assert!((discounted - 1000.0).abs() < 1e-9 * 1000.0);
    }

    #[test]
    fn path_enumeration_depth_is_capped() {
        let params = MarketParams::new(1000.0, 10, 3, 95.0, 150.0, 2.0, 0.4, 0.0).unwrap();
        let lat = build_lattice(&params, 13).unwrap();
        assert!(matches!(
            enumerate_paths(&lat, 0.5),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn combinatorial_call_agrees_with_direct_two_step_sum() {
        // Two steps, hand-expanded: q^2 on the top node only.
        let v = crr_call_price(100.0, 115.0, 1.1, 0.5, 1.0, 2);
        assert!((v - 0.25 * (121.0 - 115.0)).abs() < 1e-12);
    }

    #[test]
    fn brute_indifference_recovers_the_one_period_worked_example() {
        let tree = SimpleBinomial::new(100.0, 1.1, 0.9, 1, 0.0).unwrap();
        let claim = Claim::call(&tree, 100.0);
        let utility = UtilityFunction::exponential(1.0).unwrap();
        // The shared grid must offer the optimizer of both sides: the
        // claim-hedging position and the zero-claim speculative one.
        let d_claim = -((1.0f64 / 0.7 - 1.0).ln() + 10.0) / 20.0;
        let d_zero = (0.7f64 / 0.3).ln() / 20.0;
        let grid = vec![-1.0, d_claim, 0.0, d_zero, 1.0];
        let price = brute_indifference(&tree, &claim, utility, 0.7, &grid, 1e-7).unwrap();
        assert!((price - 5.0).abs() < 1e-3, "price {price}");
    }

    #[test]
    fn brute_indifference_zero_claim_prices_at_zero() {
        let tree = SimpleBinomial::new(100.0, 1.2, 0.85, 2, 0.0).unwrap();
        let claim = Claim::new(vec![0.0; 3]).unwrap();
        let utility = UtilityFunction::exponential(0.8).unwrap();
        let price =
            brute_indifference(&tree, &claim, utility, 0.6, &[-0.5, 0.0, 0.5], 1e-8).unwrap();
        assert!(price.abs() < 1e-7);
    }

    #[test]
    fn brute_indifference_constant_claim_prices_at_its_value() {
        let tree = SimpleBinomial::new(100.0, 1.15, 0.9, 2, 0.0).unwrap();
        let claim = Claim::new(vec![2.5; 3]).unwrap();
        let utility = UtilityFunction::exponential(1.0).unwrap();
        let price =
            brute_indifference(&tree, &claim, utility, 0.55, &[-0.4, 0.0, 0.4], 1e-8).unwrap();
        assert!((price - 2.5).abs() < 1e-7, "price {price}");
    }

    #[test]
    fn brute_indifference_matches_engine_on_shared_grid() {
        let tree = SimpleBinomial::new(100.0, 1.12, 0.9, 2, 0.0).unwrap();
        let claim = Claim::new(vec![1.5, 7.0, 11.0]).unwrap();
        let utility = UtilityFunction::exponential(1.3).unwrap();
        let grid = vec![-0.6, -0.2, 0.0, 0.3];
        let brute = brute_indifference(&tree, &claim, utility, 0.65, &grid, 1e-10).unwrap();
        let mut cfg = EngineConfig::new(utility, 0.65);
        cfg.delta_search = DeltaSearch::Grid(grid);
        cfg.interpolation = Interpolation::LogUtility;
        cfg.tol_w = 1e-10;
        let dp = indifference_price(&tree, &claim, &cfg).unwrap();
        assert!(
            (dp.price - brute).abs() < 1e-9,
            "dp {} vs brute {brute}",
            dp.price
        );
    }

    #[test]
    fn brute_indifference_caps_the_strategy_space() {
        let tree = SimpleBinomial::new(100.0, 1.1, 0.9, 4, 0.0).unwrap();
        let claim = Claim::new(vec![0.0; 5]).unwrap();
        let utility = UtilityFunction::exponential(1.0).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        assert!(matches!(
            brute_indifference(&tree, &claim, utility, 0.5, &grid, 1e-6),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn two_period_witness_node_is_infeasible() {
        let params = two_period();
        let lat = build_lattice_with_uptick(&params, 2, 1.1).unwrap();
        let surface = price_classical_warrant(&lat);
        let report =
            martingale_feasibility(&surface, params.threshold, &[NodeIndex::new(1, 1)]).unwrap();
        assert!(!report.feasible);
        assert!(!report.per_node[0].hit_feasible);
        assert!(!report.per_node[0].no_hit_feasible);
    }

    #[test]
    fn undiluted_market_is_feasible_everywhere() {
        let params = MarketParams::new(1000.0, 10, 0, 95.0, 120.0, 4.0, 0.3, 0.0).unwrap();
        let lat = build_lattice_with_uptick(&params, 4, 1.1).unwrap();
        let surface = price_classical_warrant(&lat);
        let nodes: Vec<NodeIndex> = lat.slice(3).collect();
        let report = martingale_feasibility(&surface, params.threshold, &nodes).unwrap();
        assert!(report.feasible);
        for n in &report.per_node {
            assert!(n.feasible);
        }
    }

    #[test]
    fn feasibility_rejects_interior_nodes() {
        let params = two_period();
        let lat = build_lattice_with_uptick(&params, 2, 1.1).unwrap();
        let surface = price_classical_warrant(&lat);
        assert!(
            martingale_feasibility(&surface, params.threshold, &[NodeIndex::new(0, 0)]).is_err()
        );
    }
}
