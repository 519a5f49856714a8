//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values once its assertions hold. Run with
//! `cargo test -p warrantlab --test acceptance -- --nocapture` to see every
//! line.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use warrantlab::indifference::{
    indifference_price, threshold_warrant_claim, value_surface, Claim, DeltaSearch, EngineConfig,
    Interpolation, MarketTree, SimpleBinomial, UtilityFunction,
};
use warrantlab::oracle::{
    brute_indifference, conditional_terminal_expectation, crr_call_price, martingale_feasibility,
};
use warrantlab::{
    build_lattice, build_lattice_with_uptick, certify_no_martingale, check_dilution_gap,
    compute_bounds, critical_upticks, minimal_steps, price_classical_warrant, propagate_upticks,
    AugmentedLattice, CertifyOptions, MarketParams, NodeIndex, SelectorPolicy, TradeLimits,
};

fn two_period_params() -> MarketParams {
    MarketParams::new(1000.0, 10, 3, 95.0, 108.0, 2.0, 0.3, 0.0).unwrap()
}

fn deep_params() -> MarketParams {
    MarketParams::new(1000.0, 10, 4, 95.0, 190.0, 5.0, 0.4, 0.0).unwrap()
}

fn all_policies() -> [SelectorPolicy; 4] {
    [
        SelectorPolicy::Lower,
        SelectorPolicy::Upper,
        SelectorPolicy::Blend(0.5),
        SelectorPolicy::ExpectedDilution,
    ]
}

#[test]
fn acceptance_1_two_period_counterexample() {
    let started = Instant::now();
    let params = two_period_params();
    let opts = CertifyOptions {
        u_override: Some(1.1),
        force: false,
    };
    let cert = certify_no_martingale(&params, 2, &opts).unwrap();
    let witness = cert
        .witnesses
        .iter()
        .find(|w| w.node == NodeIndex::new(1, 1))
        .expect("witness at the upper depth-1 node");
    assert!(
        (witness.e_no_hit - 110.0).abs() <= 1e-6,
        "no-hit expectation {}",
        witness.e_no_hit
    );
    assert!(
        (witness.e_hit - 106.54).abs() <= 0.05,
        "hit expectation {}",
        witness.e_hit
    );
    assert!(cert.holds);

    // Same two numbers along an independent route: conditional expectations
    // over enumerated paths under the tree's risk-neutral measure.
    let lattice = build_lattice_with_uptick(&params, 2, 1.1).unwrap();
    let node = NodeIndex::new(1, 1);
    let e_no_hit =
        conditional_terminal_expectation(&lattice, lattice.spec.q, node, |t| lattice.undiluted(t))
            .unwrap();
    let e_hit =
        conditional_terminal_expectation(&lattice, lattice.spec.q, node, |t| lattice.diluted(t))
            .unwrap();
    assert!((e_no_hit - witness.e_no_hit).abs() <= 1e-9);
    assert!((e_hit - witness.e_hit).abs() <= 1e-9);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 0.1, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: two-period counterexample, e_no_hit = {:.6}, e_hit = {:.6}, holds = {}, {:?}",
        witness.e_no_hit, witness.e_hit, cert.holds, elapsed
    );
}

#[test]
fn acceptance_2_sufficient_step_count() {
    let started = Instant::now();
    let params = deep_params();
    let n_min = minimal_steps(&params).unwrap();
    assert_eq!(n_min, 135);

    let lattice = build_lattice(&params, 135).unwrap();
    let surface = price_classical_warrant(&lattice);
    let crit = critical_upticks(&params, &lattice.spec).unwrap();
    let gap = check_dilution_gap(&lattice, &surface, crit.m, 133).unwrap();
    assert!(gap.holds, "crossing gap: {} vs {}", gap.lhs, gap.rhs);
    let chain = propagate_upticks(&lattice, &surface, crit.m, 133, 1).unwrap();
    assert!(chain.verified, "chain: {chain:?}");
    let cert = certify_no_martingale(&params, 135, &CertifyOptions::default()).unwrap();
    assert!(cert.holds);
    assert!(cert.chain.as_ref().unwrap().verified);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 2 PASS: minimal step count = {n_min}, crossing gap {:.4} > {:.4}, chain verified, {:?}",
        gap.lhs, gap.rhs, elapsed
    );
}

#[test]
fn acceptance_3_one_period_worked_example() {
    let started = Instant::now();
    let tree = SimpleBinomial::new(100.0, 1.1, 0.9, 1, 0.0).unwrap();
    let claim = Claim::call(&tree, 100.0);
    let cfg = EngineConfig::new(UtilityFunction::exponential(1.0).unwrap(), 0.7);
    let surf = value_surface(&tree, &claim, &cfg).unwrap();
    let (delta_star, phi) = surf.root(0.0);
    assert!((delta_star - (-0.4576)).abs() <= 1e-4, "delta {delta_star}");
    assert!((phi - (-0.00618)).abs() <= 1e-5, "phi {phi}");
    let solution = indifference_price(&tree, &claim, &cfg).unwrap();
    assert!(
        (solution.price - 5.000).abs() <= 1e-3,
        "price {}",
        solution.price
    );
    assert_eq!(solution.clamp_events, 0);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 0.1, "took {elapsed:?}");
    println!(
        "criterion 3 PASS: delta* = {:.6}, phi(0,C) = {:.7}, price = {:.6}, {:?}",
        delta_star, phi, solution.price, elapsed
    );
}

#[test]
fn acceptance_4_dilution_fraction_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 100 {
        let n_steps = rng.gen_range(1..=50usize);
        let n_shares = rng.gen_range(1..=50u64);
        let m_warrants = rng.gen_range(0..=30u64);
        let sigma = rng.gen_range(0.1..0.6);
        let maturity = rng.gen_range(0.25..5.0);
        let rate = rng.gen_range(0.0..0.08);
        let x0 = rng.gen_range(100.0..5000.0);
        let s0 = x0 / n_shares as f64;
        let strike = s0 * rng.gen_range(0.5..1.5);
        let params = MarketParams {
            x0,
            n_shares,
            m_warrants,
            strike,
            threshold: f64::MAX,
            maturity,
            sigma,
            rate,
        };
        let dt = maturity / n_steps as f64;
        if rate * dt >= sigma * dt.sqrt() {
            continue;
        }
        let lattice = build_lattice(&params, n_steps).unwrap();
        let surface = price_classical_warrant(&lattice);
        let w_root = surface.warrant_value(NodeIndex::new(0, 0));
        let call = crr_call_price(
            s0,
            strike,
            lattice.spec.u,
            lattice.spec.q,
            lattice.spec.growth,
            n_steps,
        );
        let target = n_shares as f64 / (n_shares + m_warrants) as f64 * call;
        let scale = target.abs().max(1e-12);
        assert!(
            (w_root - target).abs() <= 1e-9 * scale.max(w_root.abs()),
            "set {checked}: induction {w_root} vs fraction * call {target}"
        );
        checked += 1;
    }
    println!("criterion 4 PASS: dilution-fraction identity on {checked} randomized parameter sets");
}

#[test]
fn acceptance_5_selector_outputs_stay_inside_bounds() {
    let mut nodes_checked = 0usize;
    for n in 1..=12usize {
        for (m_warrants, threshold) in [(3u64, 115.0), (7, 140.0)] {
            let params =
                MarketParams::new(1000.0, 10, m_warrants, 95.0, threshold, n as f64, 0.3, 0.0)
                    .unwrap();
            let lattice = build_lattice_with_uptick(&params, n, 1.1).unwrap();
            let surface = price_classical_warrant(&lattice);
            let bounds = compute_bounds(&lattice, &surface).unwrap();
            for policy in all_policies() {
                let aug = AugmentedLattice::new(&surface, policy).unwrap();
                for node in lattice.nodes() {
                    for hit in [false, true] {
                        let price = aug.price(node, hit);
                        assert!(
                            price >= bounds.lower(node) - 1e-12
                                && price <= bounds.upper(node) + 1e-12,
                            "policy {policy}, n = {n}, node {node:?}, hit {hit}"
                        );
                        nodes_checked += 1;
                    }
                }
            }
        }
    }
    println!(
        "criterion 5 PASS: {nodes_checked} (node, policy, state) prices inside the admissible band, zero violations"
    );
}

struct EquivalenceInstance {
    label: String,
    price_dp: f64,
    price_brute: f64,
}

fn run_simple_instance(rng: &mut ChaCha8Rng, n: usize, grid_size: usize) -> EquivalenceInstance {
    let s0 = rng.gen_range(50.0..150.0);
    let up = rng.gen_range(1.05..1.3);
    let down = rng.gen_range(0.75..0.95);
    let rate = if rng.gen_bool(0.5) { 0.0 } else { 0.01 };
    let tree = SimpleBinomial::new(s0, up, down, n, rate).unwrap();
    let payoffs: Vec<f64> = (0..tree.state_count(n))
        .map(|_| rng.gen_range(0.0..12.0))
        .collect();
    let claim = Claim::new(payoffs).unwrap();
    let p_up = rng.gen_range(0.35..0.75);
    let gamma = rng.gen_range(0.5..2.0);
    let delta_grid = random_grid(rng, grid_size);
    let utility = UtilityFunction::exponential(gamma).unwrap();
    let price_brute = brute_indifference(&tree, &claim, utility, p_up, &delta_grid, 1e-10).unwrap();
    let mut cfg = EngineConfig::new(utility, p_up);
    cfg.delta_search = DeltaSearch::Grid(delta_grid);
    cfg.interpolation = Interpolation::LogUtility;
    cfg.tol_w = 1e-10;
    let dp = indifference_price(&tree, &claim, &cfg).unwrap();
    assert_eq!(dp.clamp_events, 0);
    EquivalenceInstance {
        label: format!("simple n={n} rate={rate}"),
        price_dp: dp.price,
        price_brute,
    }
}

fn run_threshold_instance(rng: &mut ChaCha8Rng, n: usize, grid_size: usize) -> EquivalenceInstance {
    let m_warrants = rng.gen_range(1..=6u64);
    let strike = rng.gen_range(80.0..100.0);
    let threshold = rng.gen_range(105.0f64..140.0).max(strike + 1.0);
    let params = MarketParams::new(
        1000.0, 10, m_warrants, strike, threshold, n as f64, 0.3, 0.0,
    )
    .unwrap();
    let lattice = build_lattice_with_uptick(&params, n, 1.1).unwrap();
    let surface = price_classical_warrant(&lattice);
    let policy = all_policies()[rng.gen_range(0..4)];
    let aug = AugmentedLattice::new(&surface, policy).unwrap();
    let claim = threshold_warrant_claim(&aug);
    let p_up = rng.gen_range(0.35..0.75);
    let gamma = rng.gen_range(0.5..2.0);
    let delta_grid = random_grid(rng, grid_size);
    let utility = UtilityFunction::exponential(gamma).unwrap();
    let price_brute = brute_indifference(&aug, &claim, utility, p_up, &delta_grid, 1e-10).unwrap();
    let mut cfg = EngineConfig::new(utility, p_up);
    cfg.delta_search = DeltaSearch::Grid(delta_grid);
    cfg.interpolation = Interpolation::LogUtility;
    cfg.tol_w = 1e-10;
    let dp = indifference_price(&aug, &claim, &cfg).unwrap();
    assert_eq!(dp.clamp_events, 0);
    EquivalenceInstance {
        label: format!("threshold n={n} policy={policy} M={m_warrants}"),
        price_dp: dp.price,
        price_brute,
    }
}

fn random_grid(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.push(rng.gen_range(0.2..1.5));
    if size >= 3 {
        grid.push(-rng.gen_range(0.2..1.5));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

#[test]
fn acceptance_6_oracle_equivalence_and_feasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut instances = Vec::new();
    for _ in 0..4 {
        instances.push(run_simple_instance(&mut rng, 2, 3));
        instances.push(run_threshold_instance(&mut rng, 2, 3));
    }
    for _ in 0..3 {
        instances.push(run_simple_instance(&mut rng, 3, 3));
        instances.push(run_threshold_instance(&mut rng, 3, 3));
    }
    for _ in 0..2 {
        instances.push(run_simple_instance(&mut rng, 4, 2));
        instances.push(run_threshold_instance(&mut rng, 4, 2));
    }
    instances.push(run_simple_instance(&mut rng, 3, 2));
    instances.push(run_threshold_instance(&mut rng, 3, 2));
    assert_eq!(instances.len(), 20);
    for inst in &instances {
        assert!(
            (inst.price_dp - inst.price_brute).abs() <= 1e-9,
            "{}: dp {} vs brute {}",
            inst.label,
            inst.price_dp,
            inst.price_brute
        );
    }

    // Every certified instance must be locally infeasible at its witness
    // nodes under the measure pinned by the firm value.
    let certified = [
        (two_period_params(), 2usize, Some(1.1)),
        (deep_params(), 135, None),
        (
            MarketParams::new(1000.0, 10, 7, 90.0, 155.0, 7.0, 0.3, 0.0).unwrap(),
            7,
            Some(1.1),
        ),
    ];
    for (params, n, u) in certified {
        let cert = certify_no_martingale(
            &params,
            n,
            &CertifyOptions {
                u_override: u,
                force: true,
            },
        )
        .unwrap();
        assert!(cert.holds);
        let lattice = match u {
            Some(u) => build_lattice_with_uptick(&params, n, u).unwrap(),
            None => build_lattice(&params, n).unwrap(),
        };
        let surface = price_classical_warrant(&lattice);
        let witness_nodes: Vec<NodeIndex> = cert.witnesses.iter().map(|w| w.node).collect();
        assert!(!witness_nodes.is_empty());
        let report = martingale_feasibility(&surface, params.threshold, &witness_nodes).unwrap();
        assert!(!report.feasible, "certified instance remained feasible");
    }

    // Without dilution every pre-maturity node admits a consistent price.
    for n in [2usize, 6, 12] {
        let params = MarketParams::new(1000.0, 10, 0, 95.0, 120.0, n as f64, 0.3, 0.0).unwrap();
        let lattice = build_lattice_with_uptick(&params, n, 1.1).unwrap();
        let surface = price_classical_warrant(&lattice);
        let nodes: Vec<NodeIndex> = lattice.slice(n - 1).collect();
        let report = martingale_feasibility(&surface, params.threshold, &nodes).unwrap();
        assert!(report.feasible);
    }

    println!(
        "criterion 6 PASS: 20 DP-vs-enumeration instances within 1e-9; feasibility verdicts correct"
    );
}

#[test]
fn acceptance_7_degeneration_suite() {
    let mut clamp_total = 0u64;

    // Without warrants and with the threshold already met, threshold
    // pricing collapses to plain-call indifference pricing. The threshold
    // invariant is overridden deliberately: with an active threshold the
    // gate would knock out paths that never touch it.
    let params = MarketParams {
        x0: 1000.0,
        n_shares: 10,
        m_warrants: 0,
        strike: 95.0,
        threshold: 50.0,
        maturity: 3.0,
        sigma: 0.3,
        rate: 0.0,
    };
    let lattice = build_lattice_with_uptick(&params, 3, 1.1).unwrap();
    let surface = price_classical_warrant(&lattice);
    let utility = UtilityFunction::exponential(1.0).unwrap();
    let mut cfg = EngineConfig::new(utility, 0.6);
    cfg.limits = TradeLimits::new(-2.0, 2.0).unwrap();
    cfg.interpolation = Interpolation::LogUtility;
    cfg.tol_w = 1e-10;
    let aug = AugmentedLattice::new(&surface, SelectorPolicy::ExpectedDilution).unwrap();
    let gated = threshold_warrant_claim(&aug);
    let threshold_sol = indifference_price(&aug, &gated, &cfg).unwrap();
    let simple = SimpleBinomial::new(100.0, 1.1, 1.0 / 1.1, 3, 0.0).unwrap();
    let call = Claim::call(&simple, params.strike);
    let plain_sol = indifference_price(&simple, &call, &cfg).unwrap();
    assert!(
        (threshold_sol.price - plain_sol.price).abs() <= 1e-9,
        "threshold {} vs plain call {}",
        threshold_sol.price,
        plain_sol.price
    );
    clamp_total += threshold_sol.clamp_events + plain_sol.clamp_events;

    // With an active threshold and no dilution, the gate can only lose
    // value relative to the plain call.
    let gated_params = MarketParams::new(1000.0, 10, 0, 95.0, 120.0, 3.0, 0.3, 0.0).unwrap();
    let gated_lattice = build_lattice_with_uptick(&gated_params, 3, 1.1).unwrap();
    let gated_surface = price_classical_warrant(&gated_lattice);
    let gated_aug = AugmentedLattice::new(&gated_surface, SelectorPolicy::Upper).unwrap();
    let gated_claim = threshold_warrant_claim(&gated_aug);
    let gated_sol = indifference_price(&gated_aug, &gated_claim, &cfg).unwrap();
    assert!(gated_sol.price <= plain_sol.price + 1e-9);
    clamp_total += gated_sol.clamp_events;

    // Cash translation at the zero rate: shifting the claim shifts the
    // price by the same constant.
    let two = two_period_params();
    let two_lattice = build_lattice_with_uptick(&two, 2, 1.1).unwrap();
    let two_surface = price_classical_warrant(&two_lattice);
    let two_aug = AugmentedLattice::new(&two_surface, SelectorPolicy::Upper).unwrap();
    let claim = threshold_warrant_claim(&two_aug);
    let mut cash_cfg = cfg.clone();
    cash_cfg.tol_w = 1e-8;
    let base = indifference_price(&two_aug, &claim, &cash_cfg).unwrap();
    clamp_total += base.clamp_events;
    for c in [-1.0, 0.0, 1.0] {
        let shifted = indifference_price(&two_aug, &claim.shifted(c), &cash_cfg).unwrap();
        assert!(
            (shifted.price - (base.price + c)).abs() <= 1e-6,
            "c = {c}: {} vs {}",
            shifted.price,
            base.price + c
        );
        clamp_total += shifted.clamp_events;
    }

    assert_eq!(clamp_total, 0, "clamped continuation queries detected");
    println!(
        "criterion 7 PASS: no-dilution collapse, barrier monotonicity, cash translation, clamp_events = 0"
    );
}
