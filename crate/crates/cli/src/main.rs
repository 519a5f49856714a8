//! Batch command-line front end for the threshold-warrant laboratory.
//!
//! Every command reads one TOML config file; a few flags override config
//! keys. Machine-readable output (JSON or CSV) goes to stdout or the
//! requested file and always echoes the resolved configuration; human
//! transcripts go to stderr. Exit codes: 0 success, 2 validation error,
//! 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use warrantlab::config::{PricingMode, RunConfig};
use warrantlab::indifference::indifference_price;
use warrantlab::{
    build_lattice, build_lattice_with_uptick, certify_no_martingale, minimal_steps,
    price_classical_warrant, price_threshold_warrant, AugmentedLattice, CertifyOptions, Claim,
    DeltaSearch, EngineConfig, Error, Interpolation, Lattice, SelectorPolicy, SimpleBinomial,
    TradeLimits, UtilityFunction,
};

#[derive(Parser)]
#[command(
    name = "warrantlab",
    about = "Lattice experiments for warrants with stock-price threshold conditions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured number of lattice steps.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Export the firm-value lattice and its price surfaces as CSV.
    BuildTree {
        #[command(flatten)]
        common: ConfigArg,
        /// Destination CSV file.
        #[arg(long)]
        output: PathBuf,
        /// Override the configured pre-hit price selector.
        #[arg(long)]
        selector: Option<String>,
    },
    /// Certify that the thresholded share price admits no martingale.
    Certify {
        #[command(flatten)]
        common: ConfigArg,
        /// Run below the sufficient step count.
        #[arg(long)]
        force: bool,
        /// Write the JSON certificate report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the smallest step count at which the crossing inequality holds.
    MinSteps {
        #[command(flatten)]
        common: ConfigArg,
    },
    /// Price the warrant by utility indifference.
    Price {
        #[command(flatten)]
        common: ConfigArg,
        /// Override the configured pre-hit price selector.
        #[arg(long)]
        selector: Option<String>,
        /// Override the physical up-move probability.
        #[arg(long)]
        p_physical: Option<f64>,
        /// Override the risk-aversion coefficient.
        #[arg(long)]
        gamma: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::BuildTree {
            common,
            output,
            selector,
        } => cmd_build_tree(common, output, selector),
        Command::Certify {
            common,
            force,
            output,
        } => cmd_certify(common, force, output),
        Command::MinSteps { common } => cmd_min_steps(common),
        Command::Price {
            common,
            selector,
            p_physical,
            gamma,
        } => cmd_price(common, selector, p_physical, gamma),
    }
}

fn load_config(common: &ConfigArg) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = RunConfig::from_toml_str(&text)?;
    if let Some(steps) = common.steps {
        match config.lattice.as_mut() {
            Some(lat) => lat.n_steps = steps,
            None => {
                config.lattice = Some(warrantlab::config::LatticeConfig {
                    n_steps: steps,
                    u_override: None,
                })
            }
        }
    }
    Ok(config)
}

fn build_from_config(config: &RunConfig) -> Result<Lattice, Error> {
    let market = config.market()?;
    let lattice_cfg = config.lattice()?;
    match lattice_cfg.u_override {
        Some(u) => build_lattice_with_uptick(market, lattice_cfg.n_steps, u),
        None => build_lattice(market, lattice_cfg.n_steps),
    }
}

fn cmd_build_tree(
    common: ConfigArg,
    output: PathBuf,
    selector: Option<String>,
) -> Result<(), Error> {
    let mut config = load_config(&common)?;
    if let Some(sel) = selector {
        config
            .threshold
            .get_or_insert_with(Default::default)
            .selector = sel;
    }
    let lattice = build_from_config(&config)?;
    let surface = price_classical_warrant(&lattice);
    let (csv, columns) = match &config.threshold {
        Some(threshold) => {
            let policy = threshold.policy()?;
            let aug = AugmentedLattice::new(&surface, policy)?;
            (aug.to_csv(), "t,tau,x,w,s_w,hit,s_wl")
        }
        None => (surface.to_csv(), "t,tau,x,w,s_w"),
    };
    fs::write(&output, &csv)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", output.display())))?;
    let summary = json!({
        "config": config_echo(&config),
        "output": output.display().to_string(),
        "columns": columns,
        "rows": csv.lines().count() - 1,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn cmd_certify(common: ConfigArg, force: bool, output: Option<PathBuf>) -> Result<(), Error> {
    let config = load_config(&common)?;
    let market = config.market()?;
    let lattice_cfg = config.lattice()?;
    let opts = CertifyOptions {
        u_override: lattice_cfg.u_override,
        force,
    };
    let certificate = certify_no_martingale(market, lattice_cfg.n_steps, &opts)?;
    eprint!("{}", certificate.transcript());
    let report = json!({
        "config": config_echo(&config),
        "certificate": certificate,
    });
    let text = serde_json::to_string_pretty(&report).expect("json");
    match output {
        Some(path) => fs::write(&path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_min_steps(common: ConfigArg) -> Result<(), Error> {
    let config = load_config(&common)?;
    let market = config.market()?;
    let n_min = minimal_steps(market)?;
    println!("{n_min}");
    eprintln!("resolved config:\n{}", config.to_toml_string());
    Ok(())
}

fn cmd_price(
    common: ConfigArg,
    selector: Option<String>,
    p_physical: Option<f64>,
    gamma: Option<f64>,
) -> Result<(), Error> {
    let mut config = load_config(&common)?;
    if let Some(sel) = selector {
        config
            .threshold
            .get_or_insert_with(Default::default)
            .selector = sel;
    }
    let pricing = config.pricing.clone().unwrap_or_default();
    let gamma = gamma.unwrap_or(pricing.gamma);
    let utility = UtilityFunction::exponential(gamma)?;
    let limits = TradeLimits::new(
        pricing.delta_min.unwrap_or(f64::NEG_INFINITY),
        pricing.delta_max.unwrap_or(f64::INFINITY),
    )?;
    let p_physical = p_physical.or(pricing.p_physical);

    let report = match pricing.mode {
        PricingMode::Threshold => {
            let market = config.market()?;
            let lattice_cfg = config.lattice()?;
            let policy: SelectorPolicy = config.threshold.clone().unwrap_or_default().policy()?;
            let pricing_run = price_threshold_warrant(
                market,
                lattice_cfg.n_steps,
                lattice_cfg.u_override,
                policy,
                utility,
                limits,
                p_physical,
                pricing.wealth_grid_points,
                pricing.tol_w,
            )?;
            json!({
                "config": config_echo(&config),
                "mode": "threshold",
                "result": pricing_run.report,
                "selector": pricing_run.selector,
                "p_up": pricing_run.p_up,
                "classical_price": pricing_run.classical_price,
                "certificate": pricing_run.certificate,
            })
        }
        PricingMode::PlainCall => {
            let missing = |key: &str| Error::Config(format!("plain_call mode needs key {key}"));
            let s0 = pricing.s0.ok_or_else(|| missing("s0"))?;
            let u = pricing.u.ok_or_else(|| missing("u"))?;
            let d = pricing.d.ok_or_else(|| missing("d"))?;
            let strike = pricing.call_strike.ok_or_else(|| missing("call_strike"))?;
            let n_steps = config.lattice()?.n_steps;
            let tree = SimpleBinomial::new(s0, u, d, n_steps, 0.0)?;
            let p_up = p_physical.unwrap_or((1.0 - d) / (u - d));
            let claim = Claim::call(&tree, strike);
            let engine = EngineConfig {
                utility,
                p_up,
                limits,
                grid_points: pricing.wealth_grid_points,
                grid_bounds: None,
                interpolation: Interpolation::LogUtility,
                delta_search: DeltaSearch::Continuous,
                tol_w: pricing.tol_w,
            };
            let solution = indifference_price(&tree, &claim, &engine)?;
            json!({
                "config": config_echo(&config),
                "mode": "plain_call",
                "result": solution,
                "p_up": p_up,
            })
        }
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

/// The resolved configuration as a TOML string, echoed into every report.
fn config_echo(config: &RunConfig) -> String {
    config.to_toml_string()
}
