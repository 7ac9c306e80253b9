//! Command-line front end: generate instances, solve and simulate them,
//! audit guarantee checks, verify the adversarial families, and drive full
//! experiment grids from a TOML description.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use picklab_core::bounds::audit_run;
use picklab_core::ciopt::{solve_ciopt, SolverBudget};
use picklab_core::harness::{
    convergence_probe, order_statistics_probe, pcart_oscillation_grid, pcartn_unfortunate_grid,
    poisson_rate_probe, render_csv, render_report, robot_oscillation_grid, run_experiment,
    verify_adversarial, ExperimentConfig, ProbeConfig,
};
use picklab_core::instance::{
    gen_dispatch_trap, gen_pcart_oscillation, gen_pcartn_unfortunate, gen_robot_oscillation,
    generate_setting, read_instance, write_instance, Instance, PolicyKind, Setting,
};
use picklab_core::reopt::simulate;

#[derive(Parser)]
#[command(
    name = "picklab",
    version,
    about = "Exact solvers and online-policy experiments for warehouse order picking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a stochastic benchmark instance and write it as JSON.
    Generate(GenerateArgs),
    /// Generate a worst-case construction and write it as JSON.
    GenerateAdversarial(GenerateAdversarialArgs),
    /// Solve the complete-information optimum of an instance.
    Solve(SolveArgs),
    /// Simulate an online policy on an instance.
    Simulate(SimulateArgs),
    /// Check a run against the analytical guarantee suite.
    Audit(AuditArgs),
    /// Run an experiment grid described by a TOML file.
    Experiment(ExperimentArgs),
    /// Verify a worst-case family grid against its closed forms.
    VerifyAdversarial(VerifyArgs),
    /// Estimate how the online-to-optimal ratio moves as load grows.
    Probe(ProbeArgs),
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse()
}

fn parse_system(s: &str) -> Result<PolicyKind, String> {
    s.parse()
}

#[derive(Args)]
struct BudgetArgs {
    /// Wall-clock limit per exact solve, in seconds.
    #[arg(long)]
    budget_secs: Option<u64>,
    /// Item-count cap per routed batch.
    #[arg(long)]
    item_limit: Option<u32>,
}

impl BudgetArgs {
    fn budget(&self) -> SolverBudget {
        let mut budget = SolverBudget::desk();
        if let Some(secs) = self.budget_secs {
            budget.wall_clock = Duration::from_secs(secs);
        }
        if let Some(limit) = self.item_limit {
            budget.batch_item_limit = limit;
        }
        budget
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Benchmark setting, e.g. base, smallbatches, largewarehouse.
    #[arg(long, value_parser = parse_setting)]
    setting: Setting,
    /// Number of orders.
    #[arg(long)]
    n: u32,
    #[arg(long)]
    seed: u64,
    /// System whose arrival rate applies: pcart-n, pcart, or robot.
    #[arg(long, value_parser = parse_system)]
    system: PolicyKind,
    /// Output path for the instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Arrivals ping-pong an interventionist pushcart between far corners.
    PcartOscillation,
    /// The robot variant of the oscillation construction.
    RobotOscillation,
    /// Arrivals land just after each non-interventionist departure.
    PcartnUnfortunate,
    /// A cluster arriving right after a long first dispatch.
    DispatchTrap,
}

#[derive(Args)]
struct GenerateAdversarialArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Repetition count (oscillation families).
    #[arg(long)]
    k: Option<u64>,
    /// Warehouse width in length units.
    #[arg(long)]
    w: Option<u64>,
    /// Warehouse depth in length units.
    #[arg(long)]
    l: Option<u64>,
    /// Small offset in length units.
    #[arg(long)]
    eps: Option<u64>,
    /// Arrival stagger in length units.
    #[arg(long)]
    delta: Option<u64>,
    /// First-dispatch tick (dispatch-trap family).
    #[arg(long)]
    t_dispatch: Option<u64>,
    /// Output path for the instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON path.
    #[arg(long = "instance")]
    instance: PathBuf,
    #[arg(long, value_parser = parse_system)]
    system: PolicyKind,
    /// Set every arrival to tick zero before solving.
    #[arg(long)]
    zero_releases: bool,
    /// Optional path for the full plan as JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "instance")]
    instance: PathBuf,
    #[arg(long, value_parser = parse_system)]
    system: PolicyKind,
    /// Optional path for the full event trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long = "instance")]
    instance: PathBuf,
    #[arg(long, value_parser = parse_system)]
    system: PolicyKind,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML description of the grid; defaults apply for missing keys.
    #[arg(long)]
    config: PathBuf,
    /// Output path for the results CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional output path for the markdown report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    PcartOscillation,
    RobotOscillation,
    PcartnUnfortunate,
}

#[derive(Args)]
struct VerifyArgs {
    /// A standard family grid to verify.
    #[arg(long, value_enum, conflicts_with = "instance")]
    grid: Option<Grid>,
    /// Instance JSON paths to verify instead of a standard grid.
    #[arg(long = "instance")]
    instance: Vec<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    /// Uniform order-statistics arrivals at growing order counts.
    OrderStatistics,
    /// Poisson arrivals at growing rates over a fixed observation window.
    Poisson,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    kind: ProbeKind,
    /// Number of seeds per probe point (seeds 0..count).
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[command(flatten)]
    budget: BudgetArgs,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::GenerateAdversarial(args) => generate_adversarial(args),
        Command::Solve(args) => solve(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Audit(args) => audit_cmd(args),
        Command::Experiment(args) => experiment(args),
        Command::VerifyAdversarial(args) => verify(args),
        Command::Probe(args) => probe(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn store_instance(instance: &Instance, path: &Path) -> Result<()> {
    write_instance(instance, path)
        .with_context(|| format!("writing instance {}", path.display()))?;
    println!("wrote {} ({})", path.display(), instance.label());
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let instance = generate_setting(args.setting, args.n, args.seed, args.system)?;
    store_instance(&instance, &args.out)
}

fn generate_adversarial(args: GenerateAdversarialArgs) -> Result<()> {
    fn need(name: &str, value: Option<u64>) -> Result<u64> {
        value.with_context(|| format!("this family requires --{name}"))
    }
    let instance = match args.family {
        Family::PcartOscillation => gen_pcart_oscillation(
            need("k", args.k)?,
            need("w", args.w)?,
            need("l", args.l)?,
            need("delta", args.delta)?,
        )?,
        Family::RobotOscillation => gen_robot_oscillation(
            need("k", args.k)?,
            need("w", args.w)?,
            need("eps", args.eps)?,
            need("delta", args.delta)?,
        )?,
        Family::PcartnUnfortunate => gen_pcartn_unfortunate(
            need("w", args.w)?,
            need("l", args.l)?,
            need("eps", args.eps)?,
            need("delta", args.delta)?,
        )?,
        Family::DispatchTrap => {
            gen_dispatch_trap(need("t-dispatch", args.t_dispatch)?, need("w", args.w)?)?
        }
    };
    store_instance(&instance, &args.out)
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut instance = load_instance(&args.instance)?;
    if args.zero_releases {
        instance.arrivals_ticks = vec![0; instance.order_count()];
    }
    let layout = instance.build_layout()?;
    let plan = solve_ciopt(&instance, &layout, args.system, &args.budget.budget())?;
    println!("instance: {}", instance.label());
    println!("system: {}", args.system);
    println!("optimum: {} ticks", plan.objective_ticks);
    for (idx, batch) in plan.batches.iter().enumerate() {
        let orders: Vec<String> = batch.order_idxs.iter().map(usize::to_string).collect();
        println!(
            "batch {}: orders [{}], finish {}",
            idx + 1,
            orders.join(", "),
            batch.route.finish_ticks
        );
    }
    if let Some(path) = &args.plan {
        write_json(path, &plan)?;
        println!("plan written to {}", path.display());
    }
    Ok(())
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let layout = instance.build_layout()?;
    let trace = simulate(&instance, &layout, args.system, &args.budget.budget())?;
    println!("instance: {}", instance.label());
    println!("system: {}", args.system);
    println!("makespan: {} ticks", trace.objective_ticks);
    println!("events: {}", trace.events.len());
    if let Some(path) = &args.trace {
        write_json(path, &trace)?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn audit_cmd(args: AuditArgs) -> Result<()> {
    let mut instance = load_instance(&args.instance)?;
    if instance.pick_time_ticks != 0 {
        // The guarantee suite is stated for pure travel; audit the
        // zero-pick-time variant of the run.
        println!("note: auditing with pick times stripped");
        instance.pick_time_ticks = 0;
    }
    let layout = instance.build_layout()?;
    let report = audit_run(&instance, &layout, args.system, &args.budget.budget())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.checks.all_hold() {
        bail!("guarantee checks failed for {}", report.instance);
    }
    Ok(())
}

/// Seed list in TOML: either a count (seeds 0..count) or an explicit list.
#[derive(Deserialize)]
#[serde(untagged)]
enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(count) => (0..*count).collect(),
            SeedSpec::List(list) => list.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExperimentConfig {
    settings: Vec<String>,
    systems: Vec<String>,
    n_values: Vec<u32>,
    seeds: SeedSpec,
    workers: usize,
    zero_pick_time: bool,
    audit_bounds: bool,
    budget_secs: u64,
    item_limit: u32,
}

impl Default for RawExperimentConfig {
    fn default() -> Self {
        let defaults = ExperimentConfig::default();
        RawExperimentConfig {
            settings: defaults.settings.iter().map(Setting::to_string).collect(),
            systems: defaults.systems.iter().map(PolicyKind::to_string).collect(),
            n_values: defaults.n_values,
            seeds: SeedSpec::List(defaults.seeds),
            workers: defaults.workers,
            zero_pick_time: defaults.zero_pick_time,
            audit_bounds: defaults.audit_bounds,
            budget_secs: defaults.budget.wall_clock.as_secs(),
            item_limit: defaults.budget.batch_item_limit,
        }
    }
}

impl RawExperimentConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let settings = self
            .settings
            .iter()
            .map(|s| s.parse::<Setting>().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?;
        let systems = self
            .systems
            .iter()
            .map(|s| s.parse::<PolicyKind>().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?;
        let mut budget = SolverBudget::desk();
        budget.wall_clock = Duration::from_secs(self.budget_secs);
        budget.batch_item_limit = self.item_limit;
        Ok(ExperimentConfig {
            settings,
            systems,
            n_values: self.n_values,
            seeds: self.seeds.seeds(),
            budget,
            workers: self.workers,
            zero_pick_time: self.zero_pick_time,
            audit_bounds: self.audit_bounds,
        })
    }
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let raw: RawExperimentConfig = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", args.config.display()))?;
    let config = raw.into_config()?;
    let outcome = run_experiment(&config)?;

    fs::write(&args.out, render_csv(&outcome.records))
        .with_context(|| format!("writing results {}", args.out.display()))?;
    println!("results written to {} ({} rows)", args.out.display(), outcome.records.len());
    if let Some(path) = &args.report {
        fs::write(path, render_report(&outcome.records))
            .with_context(|| format!("writing report {}", path.display()))?;
        println!("report written to {}", path.display());
    }

    let unsolved = outcome.records.iter().filter(|r| r.ratio().is_none()).count();
    if unsolved > 0 {
        println!("{unsolved} rows unsolved within budget");
    }
    if !outcome.audit_violations.is_empty() {
        for violation in &outcome.audit_violations {
            eprintln!("violation: {violation}");
        }
        bail!("{} guarantee violations found", outcome.audit_violations.len());
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let instances = match (args.grid, args.instance.is_empty()) {
        (Some(Grid::PcartOscillation), _) => pcart_oscillation_grid()?,
        (Some(Grid::RobotOscillation), _) => robot_oscillation_grid()?,
        (Some(Grid::PcartnUnfortunate), _) => pcartn_unfortunate_grid()?,
        (None, false) => {
            args.instance.iter().map(|p| load_instance(p)).collect::<Result<Vec<_>>>()?
        }
        (None, true) => bail!("pass --grid or at least one --instance"),
    };
    let report = verify_adversarial(&instances, &args.budget.budget())?;
    for check in &report.checks {
        let verdict = if check.matched { "ok" } else { "MISMATCH" };
        println!(
            "{}: reopt {} (expected {}), ciopt {} (expected {}): {verdict}",
            check.label,
            check.simulated_reopt_ticks,
            expected_text(check.expected_reopt_ticks),
            check.solved_ciopt_ticks,
            expected_text(check.expected_ciopt_ticks),
        );
        if let Some(trace) = &check.trace_json {
            eprintln!("trace of {}:\n{trace}", check.label);
        }
    }
    println!(
        "ratios strictly increase: {}",
        if report.ratios_strictly_increase { "yes" } else { "no" }
    );
    if !report.all_matched() {
        bail!("closed-form verification failed");
    }
    Ok(())
}

fn expected_text(value: Option<u64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

fn probe(args: ProbeArgs) -> Result<()> {
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let mut config: ProbeConfig = match args.kind {
        ProbeKind::OrderStatistics => order_statistics_probe(&seeds),
        ProbeKind::Poisson => poisson_rate_probe(&seeds),
    };
    config.budget = args.budget.budget();
    let points = convergence_probe(&config)?;
    for point in &points {
        let mut line = format!("{}: solved {}/{}", point.label, point.solved, point.total);
        if let (Some(mean), Some(median), Some(max)) =
            (point.mean_ratio, point.median_ratio, point.max_ratio)
        {
            let _ = write!(
                line,
                ", mean {mean:.4}, median {} ({:.4}), max {} ({:.4})",
                median,
                median.value(),
                max,
                max.value()
            );
        }
        println!("{line}");
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
