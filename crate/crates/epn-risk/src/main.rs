//! Command-line entry point: wires input files to the analysis pipelines and
//! writes the result files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use epn_risk::fragility::FunctionalityMapping;
use epn_risk::io;
use epn_risk::model::ComponentClass;
use epn_risk::retrofit::{budget_sweep, ga_optimize, CostTable, GaParams, RetrofitContext};
use epn_risk::simulation::{ConvergenceConfig, ScenarioEngine, SimulationInputs};

#[derive(Parser)]
#[command(
    name = "epn-risk",
    version,
    about = "Seismic risk assessment and retrofit planning for electric power networks"
)]
struct Cli {
    /// Network model file.
    #[arg(long, global = true, default_value = "data/rts24/network.json")]
    network: PathBuf,
    /// Hazard configuration file.
    #[arg(long, global = true, default_value = "data/rts24/hazard.json")]
    hazard: PathBuf,
    /// Fragility table file.
    #[arg(long, global = true, default_value = "data/rts24/fragility.json")]
    fragility: PathBuf,
    /// Retrofit cost table file.
    #[arg(long, global = true, default_value = "data/rts24/costs.json")]
    costs: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit machine-readable JSON on stdout where applicable.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispatch the intact network and report served load and line flows.
    Baseline,
    /// Simulate one damage scenario and write its full trace.
    Scenario {
        #[arg(long)]
        magnitude: f64,
    },
    /// Monte Carlo risk assessment over the magnitude grid.
    Assess(ConvArgs),
    /// One-at-a-time and category-level sensitivity of EAFL.
    Sensitivity {
        /// Median perturbation factor for the OAT analysis.
        #[arg(long, default_value_t = 0.5)]
        perturb: f64,
        /// Per-magnitude samples for each perturbed evaluation.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Genetic-algorithm retrofit optimization for one budget.
    Optimize(OptimizeArgs),
    /// Budget sweep: independent optimizations over several budgets.
    Tradeoff {
        /// Comma-separated budgets in million USD, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        #[command(flatten)]
        ga: GaArgs,
    },
}

#[derive(Args)]
struct ConvArgs {
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    min_samples: usize,
    #[arg(long, default_value_t = 2000)]
    max_samples: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Retrofit budget, million USD (falls back to budget_musd in costs.json).
    #[arg(long)]
    budget: Option<f64>,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Args)]
struct GaArgs {
    #[arg(long, default_value_t = 40)]
    population: usize,
    #[arg(long, default_value_t = 80)]
    generations: usize,
    /// Per-magnitude samples per fitness evaluation.
    #[arg(long, default_value_t = 100)]
    fitness_samples: usize,
    /// Per-magnitude samples for the OAT ranking that seeds the population.
    #[arg(long, default_value_t = 100)]
    ranking_samples: usize,
}

impl GaArgs {
    fn params(&self, master_seed: u64) -> GaParams {
        GaParams {
            population_size: self.population,
            generations: self.generations,
            fitness_samples: self.fitness_samples,
            seed: master_seed,
            ..GaParams::default()
        }
    }
}

impl ConvArgs {
    fn config(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            tau: self.tau,
            delta: self.delta,
            min_samples: self.min_samples,
            max_samples: self.max_samples,
            ..ConvergenceConfig::default()
        }
    }
}

/// Everything needed to reproduce a run, written next to its outputs.
#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    network: &'a Path,
    hazard: &'a Path,
    fragility: &'a Path,
    costs: &'a Path,
    seed: u64,
    overrides: serde_json::Value,
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not configure {threads} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let engine = build_engine(cli)?;
    match &cli.command {
        Command::Baseline => cmd_baseline(cli, &engine),
        Command::Scenario { magnitude } => cmd_scenario(cli, &engine, *magnitude),
        Command::Assess(conv) => cmd_assess(cli, &engine, &conv.config()),
        Command::Sensitivity { perturb, samples } => {
            cmd_sensitivity(cli, &engine, *perturb, *samples)
        }
        Command::Optimize(args) => cmd_optimize(cli, &engine, args),
        Command::Tradeoff { budgets, ga } => cmd_tradeoff(cli, &engine, budgets, ga),
    }
}

fn build_engine(cli: &Cli) -> Result<ScenarioEngine> {
    let network = io::load_network(&cli.network)?;
    let hazard = io::load_hazard(&cli.hazard)?;
    let fragility = io::load_fragility(&cli.fragility)?;
    let inputs = SimulationInputs::new(network, hazard, fragility, FunctionalityMapping::default())
        .context("validating inputs")?;
    Ok(ScenarioEngine::new(inputs)?)
}

fn load_costs(cli: &Cli) -> Result<CostTable> {
    Ok(io::load_costs(&cli.costs)?)
}

fn write_manifest(cli: &Cli, subcommand: &str, overrides: serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    let manifest = RunManifest {
        subcommand,
        network: &cli.network,
        hazard: &cli.hazard,
        fragility: &cli.fragility,
        costs: &cli.costs,
        seed: cli.seed,
        overrides,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(cli.out.join("manifest.json"), text)?;
    Ok(())
}

fn cmd_baseline(cli: &Cli, engine: &ScenarioEngine) -> Result<()> {
    let baseline = engine.baseline();
    let demand = engine.inputs().network.total_demand_mw();
    if cli.json {
        let mut text = serde_json::to_string_pretty(baseline)?;
        text.push('\n');
        print!("{text}");
    } else {
        println!("served = {:.1} MW (demand {:.1} MW)", baseline.total_served_mw, demand);
        for island in &baseline.islands {
            for (line, flow) in &island.flows_mw {
                println!("line {line:>3}: {flow:>9.2} MW");
            }
        }
    }
    if baseline.total_served_mw <= 0.0 {
        bail!("intact network dispatch is infeasible: no load can be served");
    }
    let unserved = demand - baseline.total_served_mw;
    if unserved > 1e-6 * demand.max(1.0) {
        let shed: Vec<u32> =
            baseline.islands.iter().flat_map(|i| i.shed_load_ids.iter().copied()).collect();
        bail!(
            "intact network cannot serve its full demand: {unserved:.3} MW unserved (shed loads: {shed:?})"
        );
    }
    Ok(())
}

fn cmd_scenario(cli: &Cli, engine: &ScenarioEngine, magnitude: f64) -> Result<()> {
    write_manifest(cli, "scenario", serde_json::json!({ "magnitude": magnitude }))?;
    let record = engine.simulate_scenario_detailed(magnitude, 0, cli.seed)?;
    let path = io::write_scenario(&cli.out, &record)?;
    if cli.json {
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        print!("{text}");
    } else {
        println!(
            "M {:.2} seed {}: served {:.2} / {:.2} MW ({:.1}%), {} islands -> {}",
            magnitude,
            cli.seed,
            record.total_served_mw,
            record.baseline_mw,
            100.0 * record.norm_functionality,
            record.islands.len(),
            path.display()
        );
    }
    Ok(())
}

fn cmd_assess(cli: &Cli, engine: &ScenarioEngine, conv: &ConvergenceConfig) -> Result<()> {
    write_manifest(
        cli,
        "assess",
        serde_json::json!({
            "tau": conv.tau,
            "delta": conv.delta,
            "min_samples": conv.min_samples,
            "max_samples": conv.max_samples,
        }),
    )?;
    let (stats, risk) = engine.assess(conv, cli.seed)?;
    let files = io::write_assess(&cli.out, cli.seed, engine.baseline_mw(), &stats, &risk)?;
    if cli.json {
        println!("{}", serde_json::json!({ "eafl": risk.eafl, "files": files }));
    } else {
        println!("EAFL = {:.6} per year ({:.4}%)", risk.eafl, 100.0 * risk.eafl);
        for (i, s) in stats.iter().enumerate() {
            println!(
                "M {:>4.1}: mean functionality {:>6.2}% (n = {:>4}, rate {:.3e})",
                s.magnitude,
                100.0 * s.mean_norm,
                s.n_samples,
                risk.rates[i]
            );
        }
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn cmd_sensitivity(
    cli: &Cli,
    engine: &ScenarioEngine,
    perturb: f64,
    samples: usize,
) -> Result<()> {
    write_manifest(
        cli,
        "sensitivity",
        serde_json::json!({ "perturb": perturb, "samples": samples }),
    )?;
    let costs = load_costs(cli)?;
    let ctx = RetrofitContext::new(engine, &costs, cli.seed)?;
    let records = ctx.all_sensitivities(perturb, samples)?;
    let path = io::write_sensitivity(&cli.out, cli.seed, &records)?;
    let baseline = ctx.eafl_of_plan(&vec![false; ctx.candidates().len()], samples)?;
    let mut category_rows = Vec::new();
    for class in ComponentClass::ALL {
        category_rows.push((class, ctx.category_sensitivity(class, samples)?));
    }
    let category_path =
        io::write_category_sensitivity(&cli.out, cli.seed, baseline, &category_rows)?;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({ "baseline_eafl": baseline, "files": [path, category_path] })
        );
    } else {
        let mut ranked = records.clone();
        ranked.sort_by(|a, b| b.influence().partial_cmp(&a.influence()).unwrap());
        println!("baseline EAFL = {baseline:.6}");
        println!("top components by |EAFL change| (perturb +-{:.0}%):", 100.0 * perturb);
        for r in ranked.iter().take(10) {
            println!("  {:>7}: up {:+.3e}  down {:+.3e}", r.component.to_string(), r.s_up, r.s_down);
        }
        for (class, eafl) in &category_rows {
            println!("all-{} retrofit: EAFL {eafl:.6}", class.label());
        }
        println!("wrote {}", path.display());
        println!("wrote {}", category_path.display());
    }
    Ok(())
}

fn cmd_optimize(cli: &Cli, engine: &ScenarioEngine, args: &OptimizeArgs) -> Result<()> {
    let costs = load_costs(cli)?;
    let budget = match args.budget.or(costs.budget_musd) {
        Some(b) => b,
        None => bail!("optimize requires --budget (or budget_musd in the cost file)"),
    };
    write_manifest(
        cli,
        "optimize",
        serde_json::json!({
            "budget": budget,
            "population": args.ga.population,
            "generations": args.ga.generations,
            "fitness_samples": args.ga.fitness_samples,
        }),
    )?;
    let ctx = RetrofitContext::new(engine, &costs, cli.seed)?;
    let params = args.ga.params(cli.seed);
    let ranking = ctx.sensitivity_ranking(0.5, args.ga.ranking_samples)?;
    let outcome = ga_optimize(&ctx, budget, &params, &ranking, &[], &ConvergenceConfig::default())?;
    let files = io::write_plan(&cli.out, cli.seed, budget, &outcome)?;
    let plan = &outcome.plan;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({
                "eafl": plan.eafl,
                "cost_musd": plan.cost_musd,
                "selected": plan.selected,
                "files": files,
            })
        );
    } else {
        let names: Vec<String> = plan.selected.iter().map(|c| c.to_string()).collect();
        println!(
            "budget {:.2} MUSD -> {} components, cost {:.2} MUSD, EAFL {:.6}",
            budget,
            plan.selected.len(),
            plan.cost_musd,
            plan.eafl.unwrap_or(f64::NAN)
        );
        println!("plan: {}", names.join(" "));
        for f in files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn cmd_tradeoff(cli: &Cli, engine: &ScenarioEngine, budgets: &[f64], ga: &GaArgs) -> Result<()> {
    write_manifest(
        cli,
        "tradeoff",
        serde_json::json!({
            "budgets": budgets,
            "population": ga.population,
            "generations": ga.generations,
            "fitness_samples": ga.fitness_samples,
        }),
    )?;
    let costs = load_costs(cli)?;
    let ctx = RetrofitContext::new(engine, &costs, cli.seed)?;
    let params = ga.params(cli.seed);
    let ranking = ctx.sensitivity_ranking(0.5, ga.ranking_samples)?;
    let rows = budget_sweep(&ctx, budgets, &params, &ranking, &ConvergenceConfig::default())?;
    let path = io::write_tradeoff(&cli.out, cli.seed, &rows)?;
    if cli.json {
        println!("{}", serde_json::json!({ "rows": rows.len(), "file": path }));
    } else {
        for row in &rows {
            println!(
                "budget {:>6.2} MUSD: EAFL {:.6}, plan cost {:.2} MUSD ({} components)",
                row.budget_musd,
                row.eafl,
                row.plan.cost_musd,
                row.plan.selected.len()
            );
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}
