//! Utility-indifference pricing of claims on binomial price trees via
//! wealth-grid dynamic programming.
//!
//! The investor rebalances a self-financing portfolio once per step under
//! per-step position limits, maximizing expected utility of terminal wealth
//! plus the claim. The indifference price of a claim is the smallest initial
//! wealth whose optimal zero-claim utility matches the optimal utility of
//! holding the claim with zero wealth. Expectations use a physical up-move
//! probability supplied by the caller; it is distinct from the risk-neutral
//! probability of the lattice.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::Serialize;

use crate::arbitrage::{certify_on_surface, ArbitrageCertificate};
use crate::classical::price_classical_warrant;
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, build_lattice_with_uptick, NodeIndex};
use crate::market::{warrant_payoff, MarketParams};
use crate::numerics::{bisect_min_wealth, maximize_on_interval};
use crate::threshold::{AugmentedLattice, Direction, SelectorPolicy, TradeLimits};

/// Strictly increasing, strictly concave utility of terminal wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityFunction {
    /// `u(x) = -(1/gamma) * exp(-gamma * x)` with `gamma > 0`.
    Exponential { gamma: f64 },
}

impl UtilityFunction {
    pub fn exponential(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "risk aversion must be positive and finite, got {gamma}"
            )));
        }
        Ok(UtilityFunction::Exponential { gamma })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            UtilityFunction::Exponential { gamma } => -(-gamma * x).exp() / gamma,
        }
    }
}

/// A binomial market as seen by the trading strategy: per-step states with
/// one traded price each and deterministic up/down successors. State `0` at
/// time `0` is the root.
pub trait MarketTree {
    fn n_steps(&self) -> usize;
    fn state_count(&self, t: usize) -> usize;
    fn price(&self, t: usize, state: usize) -> f64;
    fn child(&self, t: usize, state: usize, direction: Direction) -> usize;
    /// Simple risk-free return per step.
    fn step_rate(&self) -> f64;
}

/// Plain recombining stock tree with arbitrary up/down factors, used for
/// markets described directly by their price moves.
#[derive(Debug, Clone, Copy)]
pub struct SimpleBinomial {
    pub s0: f64,
    pub up: f64,
    pub down: f64,
    pub n_steps: usize,
    pub rate_step: f64,
}

impl SimpleBinomial {
    pub fn new(s0: f64, up: f64, down: f64, n_steps: usize, rate_step: f64) -> Result<Self> {
        if !(s0 > 0.0 && up > down && down > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need s0 > 0 and up > down > 0, got s0 = {s0}, up = {up}, down = {down}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidInput("n_steps must be at least 1".into()));
        }
        Ok(SimpleBinomial {
            s0,
            up,
            down,
            n_steps,
            rate_step,
        })
    }
}

impl MarketTree for SimpleBinomial {
    fn n_steps(&self) -> usize {
        self.n_steps
    }

    fn state_count(&self, t: usize) -> usize {
        t + 1
    }

    fn price(&self, t: usize, state: usize) -> f64 {
        self.s0 * self.up.powi(state as i32) * self.down.powi((t - state) as i32)
    }

    fn child(&self, _t: usize, state: usize, direction: Direction) -> usize {
        match direction {
            Direction::Up => state + 1,
            Direction::Down => state,
        }
    }

    fn step_rate(&self) -> f64 {
        self.rate_step
    }
}

/// The hit-augmented lattice as a market tree: state `2*offset + hit`, where
/// `hit` records whether the threshold was reached strictly before the
/// current step.
impl MarketTree for AugmentedLattice<'_> {
    fn n_steps(&self) -> usize {
        self.lattice().spec.n_steps
    }

    fn state_count(&self, t: usize) -> usize {
        2 * (t + 1)
    }

    fn price(&self, t: usize, state: usize) -> f64 {
        let node = node_of(t, state);
        self.price(node, state & 1 == 1)
    }

    fn child(&self, t: usize, state: usize, direction: Direction) -> usize {
        let node = node_of(t, state);
        let hit_before = state & 1 == 1;
        let price = self.price(node, hit_before);
        let hit_next = hit_before
            || (price >= self.lattice().params.threshold && t < self.lattice().spec.n_steps);
        let offset = match direction {
            Direction::Up => (state >> 1) + 1,
            Direction::Down => state >> 1,
        };
        2 * offset + hit_next as usize
    }

    fn step_rate(&self) -> f64 {
        self.lattice().spec.growth - 1.0
    }
}

fn node_of(t: usize, state: usize) -> NodeIndex {
    let offset = (state >> 1) as i64;
    NodeIndex::new(t, 2 * offset - t as i64)
}

/// Claim payoff per terminal state of a market tree. Finite everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    payoffs: Vec<f64>,
}

impl Claim {
    pub fn new(payoffs: Vec<f64>) -> Result<Self> {
        if payoffs.is_empty() || payoffs.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(
                "claim payoffs must be non-empty and finite".to_string(),
            ));
        }
        Ok(Claim { payoffs })
    }

    /// The zero claim on the same terminal states.
    pub fn zero_like(&self) -> Claim {
        Claim {
            payoffs: vec![0.0; self.payoffs.len()],
        }
    }

    /// Adds a constant to every payoff.
    pub fn shifted(&self, c: f64) -> Claim {
        Claim {
            payoffs: self.payoffs.iter().map(|p| p + c).collect(),
        }
    }

    /// Call payoff on the tree's terminal prices.
    pub fn call<T: MarketTree>(tree: &T, strike: f64) -> Claim {
        let n = tree.n_steps();
        let payoffs = (0..tree.state_count(n))
            .map(|s| (tree.price(n, s) - strike).max(0.0))
            .collect();
        Claim { payoffs }
    }

    pub fn payoff(&self, state: usize) -> f64 {
        self.payoffs[state]
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    fn min(&self) -> f64 {
        self.payoffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.payoffs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Claim of one threshold warrant on a hit-augmented lattice: the dilution
/// adjusted call payoff on paths that reached the threshold, zero otherwise.
pub fn threshold_warrant_claim(aug: &AugmentedLattice<'_>) -> Claim {
    let lattice = aug.lattice();
    let n = lattice.spec.n_steps;
    let payoffs = (0..2 * (n + 1))
        .map(|state| {
            if state & 1 == 1 {
                let node = node_of(n, state);
                warrant_payoff(lattice.value(node), &lattice.params).expect("positive firm value")
            } else {
                0.0
            }
        })
        .collect();
    Claim { payoffs }
}

/// Uniform wealth grid.
#[derive(Debug, Clone)]
pub struct WealthGrid {
    lo: f64,
    hi: f64,
    step: f64,
    count: usize,
}

enum Located {
    Below,
    Inside(usize, f64),
    Above,
}

impl WealthGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::GridCoverage(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if count < 2 {
            return Err(Error::GridCoverage(format!(
                "need at least 2 grid points, got {count}"
            )));
        }
        Ok(WealthGrid {
            lo,
            hi,
            step: (hi - lo) / (count - 1) as f64,
            count,
        })
    }

    pub fn min(&self) -> f64 {
        self.lo
    }

    pub fn max(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + self.step * i as f64
        }
    }

    fn locate(&self, w: f64) -> Located {
        let slack = 1e-9 * (self.hi - self.lo).max(1.0);
        if w < self.lo - slack {
            return Located::Below;
        }
        if w > self.hi + slack {
            return Located::Above;
        }
        let pos = ((w - self.lo) / self.step).clamp(0.0, (self.count - 1) as f64);
        let mut i = pos.floor() as usize;
        if i + 1 >= self.count {
            i = self.count - 2;
        }
        let frac = ((w - self.point(i)) / self.step).clamp(0.0, 1.0);
        Located::Inside(i, frac)
    }
}

/// Continuation interpolation in wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise linear in the utility values.
    Linear,
    /// Piecewise linear in `ln(-phi)`. Exact for exponential utility, whose
    /// value function is log-linear in wealth.
    LogUtility,
}

/// How the per-step position is optimized.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSearch {
    /// Coarse scan plus golden-section refinement, tolerance `1e-8`.
    Continuous,
    /// Exhaustive argmax over a fixed set of positions.
    Grid(Vec<f64>),
}

const DELTA_TOL: f64 = 1e-8;

/// Engine configuration: utility, physical measure, limits and grid.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub utility: UtilityFunction,
    /// Physical probability of an up move.
    pub p_up: f64,
    pub limits: TradeLimits,
    pub grid_points: usize,
    /// Explicit wealth-grid bounds; derived from the reachable-wealth
    /// envelope when absent.
    pub grid_bounds: Option<(f64, f64)>,
    pub interpolation: Interpolation,
    pub delta_search: DeltaSearch,
    /// Absolute tolerance of the indifference-wealth bisection.
    pub tol_w: f64,
}

impl EngineConfig {
    pub fn new(utility: UtilityFunction, p_up: f64) -> Self {
        EngineConfig {
            utility,
            p_up,
            limits: TradeLimits::unconstrained(),
            grid_points: 801,
            grid_bounds: None,
            interpolation: Interpolation::Linear,
            delta_search: DeltaSearch::Continuous,
            tol_w: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_up > 0.0 && self.p_up < 1.0) {
            return Err(Error::InvalidInput(format!(
                "physical up-probability must lie in (0, 1), got {}",
                self.p_up
            )));
        }
        if !(self.tol_w > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tol_w must be positive, got {}",
                self.tol_w
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidInput(format!(
                "wealth grid needs at least 2 points, got {}",
                self.grid_points
            )));
        }
        if let DeltaSearch::Grid(ds) = &self.delta_search {
            if ds.is_empty() || ds.iter().any(|d| !d.is_finite()) {
                return Err(Error::InvalidInput(
                    "delta grid must be non-empty and finite".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Self-financing wealth update: buy `delta` shares at `s_now`, grow the
/// cash at the per-step rate, and mark the shares at `s_next`:
/// `(w - delta * s_now) * (1 + r) + delta * s_next`.
pub fn wealth_step(w: f64, delta: f64, s_now: f64, s_next: f64, r_step: f64) -> f64 {
    (w - delta * s_now) * (1.0 + r_step) + delta * s_next
}

/// Prices and probability seen by one optimization step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext {
    pub s_now: f64,
    pub s_up: f64,
    pub s_down: f64,
    pub p_up: f64,
    pub r_step: f64,
}

/// Maximizes expected continuation utility over the admissible position.
///
/// `continuation` maps a move direction and the post-move wealth to the
/// continuation utility. Returns the maximizer and the attained value. The
/// expected-utility objective is concave in the position for concave
/// utility, so the scan only guards against interpolation artifacts.
pub fn optimize_delta<F>(
    ctx: &StepContext,
    wealth: f64,
    limits: &TradeLimits,
    search: &DeltaSearch,
    continuation: F,
) -> (f64, f64)
where
    F: Fn(Direction, f64) -> f64,
{
    let objective = |delta: f64| {
        let w_up = wealth_step(wealth, delta, ctx.s_now, ctx.s_up, ctx.r_step);
        let w_down = wealth_step(wealth, delta, ctx.s_now, ctx.s_down, ctx.r_step);
        ctx.p_up * continuation(Direction::Up, w_up)
            + (1.0 - ctx.p_up) * continuation(Direction::Down, w_down)
    };
    match search {
        DeltaSearch::Grid(deltas) => {
            let mut best = (deltas[0], f64::NEG_INFINITY);
            for &d in deltas {
                let v = objective(d);
                if v > best.1 {
                    best = (d, v);
                }
            }
            best
        }
        DeltaSearch::Continuous => {
            maximize_on_interval(&objective, limits.min, limits.max, DELTA_TOL)
        }
    }
}

/// Expected-utility value function on a (time, state, wealth) grid, with
/// the per-cell optimizer. Immutable and shareable once built; the clamp
/// counter is the only interior mutability.
pub struct ValueSurface<'a, T: MarketTree> {
    tree: &'a T,
    claim: Claim,
    cfg: EngineConfig,
    /// One wealth grid per pre-maturity slice. Auto-derived grids widen
    /// slice by slice so that every cell's children stay on the next grid;
    /// explicit bounds repeat one fixed grid.
    grids: Vec<WealthGrid>,
    /// `phi[t][state][wi]` for `t` in `0..n_steps`.
    phi: Vec<Vec<Vec<f64>>>,
    /// Optimal position per cell, same shape.
    delta: Vec<Vec<Vec<f64>>>,
    clamp_events: AtomicU64,
}

/// Builds the value surface by one backward sweep from maturity.
///
/// The maturity slice needs no grid: terminal utility `u(w + C)` is exact.
/// Interior slices store grid values of `phi`; continuation queries
/// interpolate in wealth, clamping (and counting) excursions outside the
/// grid.
pub fn value_surface<'a, T: MarketTree>(
    tree: &'a T,
    claim: &Claim,
    cfg: &EngineConfig,
) -> Result<ValueSurface<'a, T>> {
    value_surface_for_root_range(tree, claim, cfg, bisection_bracket(claim))
}

/// [`value_surface`] with an explicit range of root wealths the surface
/// will be queried at; auto-derived grids are sized from it.
fn value_surface_for_root_range<'a, T: MarketTree>(
    tree: &'a T,
    claim: &Claim,
    cfg: &EngineConfig,
    root_range: (f64, f64),
) -> Result<ValueSurface<'a, T>> {
    cfg.validate()?;
    let n = tree.n_steps();
    if claim.len() != tree.state_count(n) {
        return Err(Error::InvalidInput(format!(
            "claim has {} payoffs but the tree has {} terminal states",
            claim.len(),
            tree.state_count(n)
        )));
    }
    let bounds = match cfg.grid_bounds {
        Some(bounds) => vec![bounds; n.max(1)],
        None => reachable_wealth_bounds(tree, claim, cfg, root_range),
    };
    let grids = bounds
        .into_iter()
        .map(|(lo, hi)| WealthGrid::new(lo, hi, cfg.grid_points))
        .collect::<Result<Vec<_>>>()?;
    let mut surface = ValueSurface {
        tree,
        claim: claim.clone(),
        cfg: cfg.clone(),
        grids,
        phi: vec![Vec::new(); n],
        delta: vec![Vec::new(); n],
        clamp_events: AtomicU64::new(0),
    };
    for t in (0..n).rev() {
        let states = tree.state_count(t);
        let points = surface.grids[t].len();
        let mut phi_slice = vec![vec![0.0; points]; states];
        let mut delta_slice = vec![vec![0.0; points]; states];
        for state in 0..states {
            for wi in 0..points {
                let w = surface.grids[t].point(wi);
                let (d, v) = surface.optimize_cell(t, state, w);
                phi_slice[state][wi] = v;
                delta_slice[state][wi] = d;
            }
        }
        surface.phi[t] = phi_slice;
        surface.delta[t] = delta_slice;
    }
    Ok(surface)
}

impl<'a, T: MarketTree> ValueSurface<'a, T> {
    /// Wealth grid of one pre-maturity slice.
    pub fn grid(&self, t: usize) -> &WealthGrid {
        &self.grids[t]
    }

    /// Grid value of the optimal expected utility.
    pub fn phi(&self, t: usize, state: usize, wi: usize) -> f64 {
        self.phi[t][state][wi]
    }

    /// Grid value of the optimal position.
    pub fn delta_star(&self, t: usize, state: usize, wi: usize) -> f64 {
        self.delta[t][state][wi]
    }

    /// Number of continuation queries that fell outside the wealth grid.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// Optimal position and expected utility at the root for an arbitrary
    /// initial wealth, evaluated exactly against the first stored slice.
    pub fn root(&self, wealth: f64) -> (f64, f64) {
        self.optimize_cell(0, 0, wealth)
    }

    fn optimize_cell(&self, t: usize, state: usize, wealth: f64) -> (f64, f64) {
        let tree = self.tree;
        let up = tree.child(t, state, Direction::Up);
        let down = tree.child(t, state, Direction::Down);
        let ctx = StepContext {
            s_now: tree.price(t, state),
            s_up: tree.price(t + 1, up),
            s_down: tree.price(t + 1, down),
            p_up: self.cfg.p_up,
            r_step: tree.step_rate(),
        };
        let continuation = |direction: Direction, w: f64| {
            let child = match direction {
                Direction::Up => up,
                Direction::Down => down,
            };
            self.continuation(t + 1, child, w)
        };
        match &self.cfg.delta_search {
            DeltaSearch::Grid(_) => optimize_delta(
                &ctx,
                wealth,
                &self.cfg.limits,
                &self.cfg.delta_search,
                continuation,
            ),
            DeltaSearch::Continuous => {
                let (lo, hi) = self.effective_delta_interval(t, wealth, &ctx);
                let bounded = TradeLimits { min: lo, max: hi };
                optimize_delta(&ctx, wealth, &bounded, &self.cfg.delta_search, continuation)
            }
        }
    }

    /// Intersects the trade limits with the positions whose post-move wealth
    /// stays on the next slice's grid. Beyond the grid the continuation is
    /// flat-clamped and carries no information, so the search is restricted
    /// instead. Steps into the maturity slice are exempt: terminal utility
    /// is exact.
    fn effective_delta_interval(&self, t: usize, wealth: f64, ctx: &StepContext) -> (f64, f64) {
        let mut lo = self.cfg.limits.min;
        let mut hi = self.cfg.limits.max;
        if t + 1 == self.tree.n_steps() {
            return (lo, hi);
        }
        let grid = &self.grids[t + 1];
        let grown = wealth * (1.0 + ctx.r_step);
        for s_next in [ctx.s_up, ctx.s_down] {
            let gap = s_next - ctx.s_now * (1.0 + ctx.r_step);
            if gap.abs() < 1e-12 {
                continue;
            }
            let a = (grid.min() - grown) / gap;
            let b = (grid.max() - grown) / gap;
            let (l, h) = if gap > 0.0 { (a, b) } else { (b, a) };
            lo = lo.max(l);
            hi = hi.min(h);
        }
        if lo > hi {
            // The grown wealth itself left the grid; fall back to no trade.
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Counts a clamped continuation query; the first one per surface is
    /// worth a warning, the rest only a trace.
    fn record_clamp(&self, w: f64, grid: &WealthGrid) {
        let previous = self.clamp_events.fetch_add(1, Ordering::Relaxed);
        if previous == 0 {
            log::warn!(
                "wealth {w} outside grid [{}, {}]; clamping continuation",
                grid.lo,
                grid.hi
            );
        } else {
            log::trace!("wealth {w} outside grid [{}, {}]", grid.lo, grid.hi);
        }
    }

    fn continuation(&self, t: usize, state: usize, w: f64) -> f64 {
        if t == self.tree.n_steps() {
            return self.cfg.utility.evaluate(w + self.claim.payoff(state));
        }
        let grid = &self.grids[t];
        let values = &self.phi[t][state];
        match grid.locate(w) {
            Located::Below => {
                self.record_clamp(w, grid);
                values[0]
            }
            Located::Above => {
                self.record_clamp(w, grid);
                values[values.len() - 1]
            }
            Located::Inside(i, frac) => {
                let a = values[i];
                let b = values[i + 1];
                match self.cfg.interpolation {
                    Interpolation::Linear => a + frac * (b - a),
                    Interpolation::LogUtility => {
                        if a < 0.0 && b < 0.0 {
                            let la = (-a).ln();
                            let lb = (-b).ln();
                            -(la + frac * (lb - la)).exp()
                        } else {
                            a + frac * (b - a)
                        }
                    }
                }
            }
        }
    }
}

/// Per-slice wealth ranges reachable from the bisection bracket under the
/// configured position limits. Each slice's range contains the one-step
/// image of the previous slice's whole range, so no interpolation query can
/// leave its grid.
fn reachable_wealth_bounds<T: MarketTree>(
    tree: &T,
    claim: &Claim,
    cfg: &EngineConfig,
    root_range: (f64, f64),
) -> Vec<(f64, f64)> {
    let (mut lo, mut hi) = root_range;
    lo -= 1.0;
    hi += 1.0;
    let n = tree.n_steps();
    let r = tree.step_rate();

    let (d_lo, d_hi) = match &cfg.delta_search {
        DeltaSearch::Grid(ds) => ds
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &d| {
                (l.min(d), h.max(d))
            }),
        DeltaSearch::Continuous => {
            if cfg.limits.is_bounded() {
                (cfg.limits.min, cfg.limits.max)
            } else {
                let mag = heuristic_delta_magnitude(tree, claim, cfg);
                (
                    if cfg.limits.min.is_finite() {
                        cfg.limits.min
                    } else {
                        -mag
                    },
                    if cfg.limits.max.is_finite() {
                        cfg.limits.max
                    } else {
                        mag
                    },
                )
            }
        }
    };

    let mut bounds = Vec::with_capacity(n.max(1));
    bounds.push((lo, hi));
    for t in 0..n.saturating_sub(1) {
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for state in 0..tree.state_count(t) {
            let s_now = tree.price(t, state);
            for dir in [Direction::Up, Direction::Down] {
                let child = tree.child(t, state, dir);
                let gap = tree.price(t + 1, child) - s_now * (1.0 + r);
                g_min = g_min.min(gap);
                g_max = g_max.max(gap);
            }
        }
        let candidates = [d_lo * g_min, d_lo * g_max, d_hi * g_min, d_hi * g_max];
        let c_min = candidates.iter().copied().fold(f64::INFINITY, f64::min);
        let c_max = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo = lo * (1.0 + r) + c_min.min(0.0);
        hi = hi * (1.0 + r) + c_max.max(0.0);
        bounds.push((lo, hi));
    }
    bounds
}

/// Rough cap on the position an unconstrained exponential-utility trader
/// would take: hedging scale plus the risk-adjustment scale.
fn heuristic_delta_magnitude<T: MarketTree>(tree: &T, claim: &Claim, cfg: &EngineConfig) -> f64 {
    let n = tree.n_steps();
    let r = tree.step_rate();
    let mut g_abs_min = f64::INFINITY;
    for t in 0..n {
        for state in 0..tree.state_count(t) {
            let s_now = tree.price(t, state);
            for dir in [Direction::Up, Direction::Down] {
                let child = tree.child(t, state, dir);
                let gap = (tree.price(t + 1, child) - s_now * (1.0 + r)).abs();
                if gap > 1e-9 {
                    g_abs_min = g_abs_min.min(gap);
                }
            }
        }
    }
    if !g_abs_min.is_finite() {
        return 1.0;
    }
    let UtilityFunction::Exponential { gamma } = cfg.utility;
    let odds = (cfg.p_up / (1.0 - cfg.p_up)).ln().abs();
    let span = claim.max() - claim.min();
    4.0 * ((span + 1.0) / g_abs_min + (odds + 10.0) / (gamma * g_abs_min) + 1.0)
}

/// Bisection bracket for the indifference wealth: the price of a claim
/// under a non-negative rate lies between its extreme payoffs.
fn bisection_bracket(claim: &Claim) -> (f64, f64) {
    (claim.min().min(0.0) - 2.0, claim.max().max(0.0) + 2.0)
}

/// Result record of one indifference-pricing run.
#[derive(Debug, Clone, Serialize)]
pub struct IndifferenceSolution {
    /// Smallest initial wealth matching the utility of holding the claim.
    pub price: f64,
    /// Optimal expected utility of holding the claim with zero wealth.
    pub phi_with_claim: f64,
    /// Optimal zero-claim expected utility at the indifference wealth.
    pub phi_breakeven: f64,
    /// Continuation queries clamped at the wealth-grid edge across both
    /// surfaces; zero on a healthy run.
    pub clamp_events: u64,
    pub runtime_ms: u64,
}

/// Computes the indifference price of a claim by bisection on the initial
/// wealth, to absolute tolerance `cfg.tol_w`. Monotonicity of the value in
/// wealth makes the solution unique.
pub fn indifference_price<T: MarketTree>(
    tree: &T,
    claim: &Claim,
    cfg: &EngineConfig,
) -> Result<IndifferenceSolution> {
    let started = Instant::now();
    let with_claim = value_surface(tree, claim, cfg)?;
    let (_, phi_with_claim) = with_claim.root(0.0);
    let zero = claim.zero_like();
    // The bisection walks the zero-claim surface across the claim's wealth
    // bracket, so that surface must be sized for it.
    let (lo, hi) = bisection_bracket(claim);
    let breakeven = value_surface_for_root_range(tree, &zero, cfg, (lo, hi))?;
    let f = |w: f64| breakeven.root(w).1;
    let price = bisect_min_wealth(&f, phi_with_claim, lo, hi, cfg.tol_w)?;
    let phi_breakeven = f(price);
    Ok(IndifferenceSolution {
        price,
        phi_with_claim,
        phi_breakeven,
        clamp_events: with_claim.clamp_events() + breakeven.clamp_events(),
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// Full threshold-warrant pricing record: the indifference price of the
/// gated claim, the classical warrant value for comparison, and the
/// no-martingale certificate for the same market.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdPricing {
    pub selector: String,
    /// Physical up-probability used for the expectation.
    pub p_up: f64,
    pub report: IndifferenceSolution,
    /// Classical (ungated) warrant value at the root, from backward
    /// induction.
    pub classical_price: f64,
    pub certificate: ArbitrageCertificate,
}

/// Prices one threshold warrant by utility indifference on the
/// hit-augmented lattice.
///
/// The physical up-probability defaults to the risk-neutral one when not
/// supplied. Continuation values interpolate in the log domain, which is
/// exact for exponential utility.
#[allow(clippy::too_many_arguments)]
pub fn price_threshold_warrant(
    params: &MarketParams,
    n_steps: usize,
    u_override: Option<f64>,
    policy: SelectorPolicy,
    utility: UtilityFunction,
    limits: TradeLimits,
    p_physical: Option<f64>,
    grid_points: usize,
    tol_w: f64,
) -> Result<ThresholdPricing> {
    let lattice = match u_override {
        Some(u) => build_lattice_with_uptick(params, n_steps, u)?,
        None => build_lattice(params, n_steps)?,
    };
    let surface = price_classical_warrant(&lattice);
    let aug = AugmentedLattice::new(&surface, policy)?;
    let claim = threshold_warrant_claim(&aug);
    let p_up = match p_physical {
        Some(p) => p,
        None => {
            log::info!(
                "no physical up-probability supplied; defaulting to the risk-neutral {}",
                lattice.spec.q
            );
            lattice.spec.q
        }
    };
    let cfg = EngineConfig {
        utility,
        p_up,
        limits,
        grid_points,
        grid_bounds: None,
        interpolation: Interpolation::LogUtility,
        delta_search: DeltaSearch::Continuous,
        tol_w,
    };
    let report = indifference_price(&aug, &claim, &cfg)?;
    let certificate = certify_on_surface(&lattice, &surface)?;
    Ok(ThresholdPricing {
        selector: policy.to_string(),
        p_up,
        report,
        classical_price: surface.warrant_value(NodeIndex::new(0, 0)),
        certificate,
    })
}
