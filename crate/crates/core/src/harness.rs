//! Experiment orchestration: sweeps settings, order counts, seeds, and
//! systems; solves every cell exactly; and renders deterministic CSV and
//! markdown artifacts plus the statistics the study needs (Spearman rank
//! correlation, convergence probes, adversarial-grid verification).
//!
//! Determinism contract: a run's records depend only on its configuration,
//! never on the worker count. Cells are solved in parallel but collected in
//! submission order and then sorted by a canonical key, so the rendered CSV
//! is byte-identical across `PICKLAB_WORKERS` values.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::bounds::{audit_run, BoundChecks, Ratio};
use crate::ciopt::{solve_ciopt, SolverBudget, Unsolved};
use crate::geometry::{GeometryError, Layout, LayoutSpec};
use crate::instance::{
    gen_pcart_oscillation, gen_pcartn_unfortunate, gen_robot_oscillation, generate_setting,
    sample_arrivals, ArrivalDistribution, ArrivalModel, Instance, InstanceError, PolicyKind,
    Provenance, Setting, SHIFT_TICKS,
};
use crate::reopt::simulate;

/// Environment variable overriding the worker count, highest priority.
pub const WORKERS_ENV: &str = "PICKLAB_WORKERS";

/// Header of the results CSV, fixed so downstream tooling can rely on it.
pub const CSV_HEADER: &str = "setting,system,n,seed,reopt_ticks,ciopt_ticks,ratio,status";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment grid is empty: no {0} configured")]
    EmptyGrid(&'static str),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("instance '{0}' has no adversarial provenance with expected values")]
    NotAdversarial(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Unsolved(#[from] Unsolved),
}

// ---------------------------------------------------------------------------
// Experiment configuration and records
// ---------------------------------------------------------------------------

/// Grid and resource description for [`run_experiment`]. The grid is the
/// cross product settings x systems x n_values x seeds; each list is
/// deduplicated and put in canonical order before running, so permuted
/// configurations produce identical results.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub settings: Vec<Setting>,
    pub systems: Vec<PolicyKind>,
    pub n_values: Vec<u32>,
    pub seeds: Vec<u64>,
    pub budget: SolverBudget,
    /// Worker threads; 0 means one per available core. The `PICKLAB_WORKERS`
    /// environment variable, when set to a positive integer, wins over this.
    pub workers: usize,
    /// Strip pick times before solving, isolating travel and waiting.
    pub zero_pick_time: bool,
    /// After each solved cell, re-check the run against the guarantee suite
    /// (on a zero-pick-time copy when the cell has pick times, since the
    /// guarantees are stated for pure travel).
    pub audit_bounds: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            settings: vec![Setting::Base],
            systems: PolicyKind::ALL.to_vec(),
            n_values: (3..=10).collect(),
            seeds: (0..10).collect(),
            budget: SolverBudget::desk(),
            workers: 0,
            zero_pick_time: false,
            audit_bounds: false,
        }
    }
}

/// How far a cell got. A missing optimum takes precedence in the label
/// because without it the row can never produce a ratio, while a missing
/// simulation still leaves the optimum of record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    CioptUnsolved,
    ReoptUnsolved,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::CioptUnsolved => "ciopt_unsolved",
            RowStatus::ReoptUnsolved => "reopt_unsolved",
        })
    }
}

/// One experiment cell: the online makespan, the complete-information
/// optimum, and how the attempt ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioRecord {
    pub setting: Setting,
    pub system: PolicyKind,
    pub n: u32,
    pub seed: u64,
    pub reopt_ticks: Option<u64>,
    pub ciopt_ticks: Option<u64>,
    pub status: RowStatus,
}

impl RatioRecord {
    /// Exact online-to-optimal ratio; present only for fully solved cells.
    pub fn ratio(&self) -> Option<Ratio> {
        match (self.reopt_ticks, self.ciopt_ticks) {
            (Some(reopt), Some(ciopt)) => Ratio::new(reopt, ciopt),
            _ => None,
        }
    }

    fn sort_key(&self) -> (String, usize, u32, u64) {
        (self.setting.to_string(), system_rank(self.system), self.n, self.seed)
    }
}

fn system_rank(system: PolicyKind) -> usize {
    PolicyKind::ALL.iter().position(|&s| s == system).expect("known system")
}

/// Everything a run produces: sorted records plus any guarantee violations
/// found by the audit pass (empty when auditing is off or all checks hold).
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RatioRecord>,
    pub audit_violations: Vec<String>,
}

// ---------------------------------------------------------------------------
// Running the grid
// ---------------------------------------------------------------------------

/// Picks the worker count: a positive integer in the environment override
/// wins, then a positive configured value, then one thread per core.
pub fn resolve_workers(env_override: Option<&str>, configured: usize) -> usize {
    if let Some(raw) = env_override {
        if let Ok(k) = raw.trim().parse::<usize>() {
            if k > 0 {
                return k;
            }
        }
    }
    if configured > 0 {
        return configured;
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Cell {
    setting_idx: usize,
    setting: Setting,
    system: PolicyKind,
    n: u32,
    seed: u64,
    instance: Instance,
}

/// Solves every cell of the configured grid. Individual cells that exhaust
/// the budget are recorded as unsolved rows; only infrastructure problems
/// (empty grid, layout construction, generator schema errors) abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let mut settings = config.settings.clone();
    settings.sort_by_key(|s| s.to_string());
    settings.dedup();
    let mut systems = config.systems.clone();
    systems.sort_by_key(|&s| system_rank(s));
    systems.dedup();
    let mut n_values = config.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let mut seeds = config.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    if settings.is_empty() {
        return Err(HarnessError::EmptyGrid("settings"));
    }
    if systems.is_empty() {
        return Err(HarnessError::EmptyGrid("systems"));
    }
    if n_values.is_empty() {
        return Err(HarnessError::EmptyGrid("n values"));
    }
    if seeds.is_empty() {
        return Err(HarnessError::EmptyGrid("seeds"));
    }

    let layouts: Vec<Layout> = settings
        .iter()
        .map(|s| Layout::from_spec(&LayoutSpec::Warehouse(s.warehouse())))
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::new();
    for (setting_idx, &setting) in settings.iter().enumerate() {
        for &system in &systems {
            for &n in &n_values {
                for &seed in &seeds {
                    let mut instance = generate_setting(setting, n, seed, system)?;
                    if config.zero_pick_time {
                        instance.pick_time_ticks = 0;
                    }
                    cells.push(Cell { setting_idx, setting, system, n, seed, instance });
                }
            }
        }
    }

    let workers = resolve_workers(std::env::var(WORKERS_ENV).ok().as_deref(), config.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let mut results: Vec<(RatioRecord, Option<String>)> = pool.install(|| {
        cells.par_iter().map(|cell| run_cell(cell, &layouts[cell.setting_idx], config)).collect()
    });
    results.sort_by_key(|(record, _)| record.sort_key());

    let mut records = Vec::with_capacity(results.len());
    let mut audit_violations = Vec::new();
    for (record, violation) in results {
        records.push(record);
        audit_violations.extend(violation);
    }
    Ok(ExperimentOutcome { records, audit_violations })
}

fn run_cell(
    cell: &Cell,
    layout: &Layout,
    config: &ExperimentConfig,
) -> (RatioRecord, Option<String>) {
    let (reopt_ticks, ciopt_ticks, status) =
        match solve_ciopt(&cell.instance, layout, cell.system, &config.budget) {
            Err(_) => (None, None, RowStatus::CioptUnsolved),
            Ok(plan) => match simulate(&cell.instance, layout, cell.system, &config.budget) {
                Err(_) => (None, Some(plan.objective_ticks), RowStatus::ReoptUnsolved),
                Ok(trace) => {
                    (Some(trace.objective_ticks), Some(plan.objective_ticks), RowStatus::Ok)
                }
            },
        };
    let record = RatioRecord {
        setting: cell.setting,
        system: cell.system,
        n: cell.n,
        seed: cell.seed,
        reopt_ticks,
        ciopt_ticks,
        status,
    };
    let violation = if config.audit_bounds && status == RowStatus::Ok {
        audit_cell(cell, layout, &config.budget)
    } else {
        None
    };
    (record, violation)
}

/// Re-solves the cell with pick times stripped and checks the guarantee
/// suite; returns a description of any failure.
fn audit_cell(cell: &Cell, layout: &Layout, budget: &SolverBudget) -> Option<String> {
    let stripped;
    let target = if cell.instance.pick_time_ticks == 0 {
        &cell.instance
    } else {
        stripped = {
            let mut copy = cell.instance.clone();
            copy.pick_time_ticks = 0;
            copy
        };
        &stripped
    };
    match audit_run(target, layout, cell.system, budget) {
        Ok(report) if report.checks.all_hold() => None,
        Ok(report) => Some(format!(
            "{}: failed checks: {}",
            report.instance,
            failed_check_names(&report.checks).join(", ")
        )),
        Err(err) => Some(format!("{}: audit error: {err}", cell.instance.label())),
    }
}

fn failed_check_names(checks: &BoundChecks) -> Vec<&'static str> {
    let mut names = Vec::new();
    if !checks.reopt_within_restart_bound {
        names.push("restart bound");
    }
    if !checks.makespan_packing_lower_bound {
        names.push("packing lower bound");
    }
    if !checks.release_lower_bound {
        names.push("release lower bound");
    }
    if !checks.asymptotic_ratio_bound {
        names.push("additive-slack envelope");
    }
    if !checks.strict_ratio_bound {
        names.push("multiplicative envelope");
    }
    names
}

// ---------------------------------------------------------------------------
// CSV and report rendering
// ---------------------------------------------------------------------------

/// Rounds `num/den` half-up to `decimals` places and formats it exactly,
/// entirely in integer arithmetic: the scaled quotient is
/// `floor((2 * num * 10^d + den) / (2 * den))`.
pub fn format_ratio_decimal(ratio: Ratio, decimals: usize) -> String {
    let pow = 10u128.pow(decimals as u32);
    let num = u128::from(ratio.num);
    let den = u128::from(ratio.den);
    let scaled = (2 * num * pow + den) / (2 * den);
    if decimals == 0 {
        return scaled.to_string();
    }
    format!("{}.{:0width$}", scaled / pow, scaled % pow, width = decimals)
}

/// Renders records as CSV with the fixed [`CSV_HEADER`]. Ratio cells carry
/// six half-up decimals; unsolved quantities render as empty fields.
pub fn render_csv(records: &[RatioRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let reopt = r.reopt_ticks.map(|v| v.to_string()).unwrap_or_default();
        let ciopt = r.ciopt_ticks.map(|v| v.to_string()).unwrap_or_default();
        let ratio = r.ratio().map(|q| format_ratio_decimal(q, 6)).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.setting, r.system, r.n, r.seed, reopt, ciopt, ratio, r.status
        )
        .expect("string write");
    }
    out
}

/// Aggregates of one (setting, system, n) cell group across seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub solved: usize,
    pub total: usize,
    /// Largest exact ratio among solved runs.
    pub worst: Option<Ratio>,
    /// Mean of the solved ratios, accumulated in seed order.
    pub mean: Option<f64>,
}

impl TableCell {
    fn render(&self, value: Option<String>) -> String {
        if self.solved < 8 {
            return "--".to_string();
        }
        let mut text = value.unwrap_or_else(|| "--".to_string());
        if self.solved <= 9 {
            text.push('*');
        }
        text
    }

    /// Worst ratio, two half-up decimals; `--` below eight solved runs, a
    /// trailing `*` at eight or nine.
    pub fn render_worst(&self) -> String {
        self.render(self.worst.map(|q| format_ratio_decimal(q, 2)))
    }

    /// Mean ratio under the same annotation rules as [`Self::render_worst`].
    pub fn render_mean(&self) -> String {
        self.render(self.mean.map(format_mean))
    }
}

fn format_mean(mean: f64) -> String {
    let scaled = (mean * 100.0).round() as i64;
    format!("{}.{:02}", scaled / 100, (scaled % 100).abs())
}

/// Collects the solved-run aggregates of one cell group.
pub fn table_cell(
    records: &[RatioRecord],
    setting: Setting,
    system: PolicyKind,
    n: u32,
) -> TableCell {
    let mut solved = 0usize;
    let mut total = 0usize;
    let mut worst: Option<Ratio> = None;
    let mut sum = 0.0f64;
    for r in records {
        if r.setting != setting || r.system != system || r.n != n {
            continue;
        }
        total += 1;
        if let Some(q) = r.ratio() {
            solved += 1;
            sum += q.value();
            worst = Some(worst.map_or(q, |w| w.max(q)));
        }
    }
    let mean = (solved > 0).then(|| sum / solved as f64);
    TableCell { solved, total, worst, mean }
}

fn sorted_unique<T: Clone + Ord>(values: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = values.collect();
    out.sort();
    out.dedup();
    out
}

/// Renders a markdown report: one table per setting with worst and mean
/// ratio columns per system, plus a Spearman rank correlation of n against
/// the ratio for each system.
pub fn render_report(records: &[RatioRecord]) -> String {
    let mut out = String::from("# Online-to-optimal ratio experiment\n");
    let settings = sorted_unique(records.iter().map(|r| r.setting));
    for setting in settings {
        let in_setting: Vec<&RatioRecord> =
            records.iter().filter(|r| r.setting == setting).collect();
        let mut systems = sorted_unique(in_setting.iter().map(|r| system_rank(r.system)));
        let systems: Vec<PolicyKind> =
            systems.drain(..).map(|rank| PolicyKind::ALL[rank]).collect();
        let n_values = sorted_unique(in_setting.iter().map(|r| r.n));

        let _ = write!(out, "\n## {setting}\n\n| n |");
        for system in &systems {
            let _ = write!(out, " {system} worst | {system} mean | {system} solved |");
        }
        out.push_str("\n|---|");
        for _ in &systems {
            out.push_str("---|---|---|");
        }
        out.push('\n');
        for &n in &n_values {
            let _ = write!(out, "| {n} |");
            for &system in &systems {
                let cell = table_cell(records, setting, system, n);
                let _ = write!(
                    out,
                    " {} | {} | {}/{} |",
                    cell.render_worst(),
                    cell.render_mean(),
                    cell.solved,
                    cell.total
                );
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str("Cells show `--` below eight solved runs and a `*` at eight or nine.\n\n");
        for &system in &systems {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in &in_setting {
                if r.system != system {
                    continue;
                }
                if let Some(q) = r.ratio() {
                    xs.push(u64::from(r.n));
                    ys.push(q);
                }
            }
            match spearman(&xs, &ys) {
                SpearmanResult::Computed { rho, p_value } => {
                    let _ = writeln!(
                        out,
                        "Spearman n vs ratio, {system}: rho = {rho:.3}, p = {p_value:.4} (m = {})",
                        xs.len()
                    );
                }
                SpearmanResult::Undefined => {
                    let _ = writeln!(
                        out,
                        "Spearman n vs ratio, {system}: undefined (m = {})",
                        xs.len()
                    );
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpearmanResult {
    /// Fewer than three pairs, or a constant margin (zero rank variance).
    Undefined,
    Computed {
        rho: f64,
        p_value: f64,
    },
}

/// Spearman rank correlation of `xs` against `ys` with average ranks on
/// ties (exact ratio comparison on the y side). The two-sided p-value uses
/// the t approximation `t = rho * sqrt((m-2) / (1-rho^2))` with m-2 degrees
/// of freedom; perfectly monotone samples get p = 0.
pub fn spearman(xs: &[u64], ys: &[Ratio]) -> SpearmanResult {
    let m = xs.len();
    if m != ys.len() || m < 3 {
        return SpearmanResult::Undefined;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    match pearson(&rx, &ry) {
        None => SpearmanResult::Undefined,
        Some(rho) => SpearmanResult::Computed { rho, p_value: t_approx_p(rho, m) },
    }
}

fn average_ranks<T: Ord>(values: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..=j share the average of ranks i+1..=j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either side has zero variance.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn t_approx_p(rho: f64, m: usize) -> f64 {
    if rho.abs() >= 1.0 - 1e-12 {
        return 0.0;
    }
    let df = (m - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Exact permutation p-value for the Spearman statistic, feasible up to ten
/// pairs (10! orderings): the share of y-permutations whose |rho| reaches
/// the observed one. `None` when the statistic is undefined or m > 10.
pub fn spearman_exact_permutation(xs: &[u64], ys: &[Ratio]) -> Option<f64> {
    let m = xs.len();
    if m != ys.len() || m < 3 || m > 10 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mx = rx.iter().sum::<f64>() / m as f64;
    let my = ry.iter().sum::<f64>() / m as f64;
    let cx: Vec<f64> = rx.iter().map(|&v| v - mx).collect();
    let mut cy: Vec<f64> = ry.iter().map(|&v| v - my).collect();
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    let denom = (sxx * syy).sqrt();
    let rho_of = |cy: &[f64]| cx.iter().zip(cy).map(|(&a, &b)| a * b).sum::<f64>() / denom;
    let observed = rho_of(&cy).abs();

    // Heap's algorithm over the centered y ranks; variances are
    // permutation-invariant so only the cross term changes.
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut counters = vec![0usize; m];
    let mut visit = |cy: &[f64]| {
        total += 1;
        if rho_of(cy).abs() >= observed - 1e-9 {
            hits += 1;
        }
    };
    visit(&cy);
    let mut i = 0;
    while i < m {
        if counters[i] < i {
            if i % 2 == 0 {
                cy.swap(0, i);
            } else {
                cy.swap(counters[i], i);
            }
            visit(&cy);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Some(hits as f64 / total as f64)
}

// ---------------------------------------------------------------------------
// Convergence probes
// ---------------------------------------------------------------------------

/// What a convergence probe varies along its x axis.
#[derive(Clone, Debug)]
pub enum ProbeMode {
    /// Arrivals are order statistics of n i.i.d. draws; the probe varies n.
    OrderStatistics { distribution: ArrivalDistribution, n_values: Vec<u32> },
    /// Arrivals come from a Poisson process observed over a fixed window;
    /// the probe varies the rate, so a higher rate brings more orders into
    /// the same window (a seed with no arrival inside the window keeps its
    /// first order anyway).
    PoissonRateSweep { rates_per_shift: Vec<f64>, shift_ticks: u64, window_ticks: u64 },
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub mode: ProbeMode,
    pub setting: Setting,
    pub system: PolicyKind,
    pub seeds: Vec<u64>,
    pub budget: SolverBudget,
}

/// Ratio statistics of one probe point across its seeds.
#[derive(Clone, Debug)]
pub struct ProbePoint {
    pub label: String,
    pub solved: usize,
    pub total: usize,
    pub mean_ratio: Option<f64>,
    /// Exact median: middle ratio, or the exact average of the middle two.
    pub median_ratio: Option<Ratio>,
    pub max_ratio: Option<Ratio>,
}

/// The standard shrinking-margin probe: uniform order-statistics arrivals
/// over an eight-hour-equivalent horizon at growing order counts.
pub fn order_statistics_probe(seeds: &[u64]) -> ProbeConfig {
    ProbeConfig {
        mode: ProbeMode::OrderStatistics {
            distribution: ArrivalDistribution::Uniform { horizon_ticks: 28_800 },
            n_values: vec![4, 8, 12],
        },
        setting: Setting::Base,
        system: PolicyKind::Pcart,
        seeds: seeds.to_vec(),
        budget: SolverBudget::desk(),
    }
}

/// The standard rate-sweep probe: Poisson arrivals at one, two, and four
/// times the base rate over a fixed 1/30-shift window, so the expected
/// order count grows from about three to about twelve along the sweep.
pub fn poisson_rate_probe(seeds: &[u64]) -> ProbeConfig {
    let base = f64::from(Setting::Base.rate_per_shift(PolicyKind::Pcart));
    ProbeConfig {
        mode: ProbeMode::PoissonRateSweep {
            rates_per_shift: vec![base, 2.0 * base, 4.0 * base],
            shift_ticks: SHIFT_TICKS,
            window_ticks: SHIFT_TICKS / 30,
        },
        setting: Setting::Base,
        system: PolicyKind::Pcart,
        seeds: seeds.to_vec(),
        budget: SolverBudget::desk(),
    }
}

/// Runs a probe: per point, generates the setting's orders per seed,
/// replaces the arrivals with the probe's model, solves both sides, and
/// aggregates the exact ratios. Draws are coupled across points through the
/// shared seed stream, so points are directly comparable.
pub fn convergence_probe(config: &ProbeConfig) -> Result<Vec<ProbePoint>, HarnessError> {
    if config.seeds.is_empty() {
        return Err(HarnessError::EmptyGrid("seeds"));
    }
    let layout = Layout::from_spec(&LayoutSpec::Warehouse(config.setting.warehouse()))?;
    enum PointSpec {
        FixedCount { model: ArrivalModel, n: u32 },
        Window { model: ArrivalModel, window_ticks: u64 },
    }
    let points: Vec<(String, PointSpec)> = match &config.mode {
        ProbeMode::OrderStatistics { distribution, n_values } => {
            if n_values.is_empty() {
                return Err(HarnessError::EmptyGrid("n values"));
            }
            n_values
                .iter()
                .map(|&n| {
                    let model =
                        ArrivalModel::OrderStatistics { distribution: distribution.clone() };
                    (format!("n={n}"), PointSpec::FixedCount { model, n })
                })
                .collect()
        }
        ProbeMode::PoissonRateSweep { rates_per_shift, shift_ticks, window_ticks } => {
            if rates_per_shift.is_empty() {
                return Err(HarnessError::EmptyGrid("rates"));
            }
            rates_per_shift
                .iter()
                .map(|&rate| {
                    let model =
                        ArrivalModel::Poisson { rate_per_shift: rate, shift_ticks: *shift_ticks };
                    (
                        format!("rate={rate}"),
                        PointSpec::Window { model, window_ticks: *window_ticks },
                    )
                })
                .collect()
        }
    };

    let mut out = Vec::with_capacity(points.len());
    for (label, spec) in points {
        let mut ratios = Vec::new();
        for &seed in &config.seeds {
            let (n, arrivals) = match &spec {
                PointSpec::FixedCount { model, n } => (*n, sample_arrivals(model, *n, seed)?),
                PointSpec::Window { model, window_ticks } => {
                    sample_window_arrivals(model, *window_ticks, seed)?
                }
            };
            let mut instance = generate_setting(config.setting, n, seed, config.system)?;
            instance.arrivals_ticks = arrivals;
            instance.provenance = None;
            let solved = solve_ciopt(&instance, &layout, config.system, &config.budget)
                .ok()
                .and_then(|plan| {
                    simulate(&instance, &layout, config.system, &config.budget)
                        .ok()
                        .and_then(|trace| Ratio::new(trace.objective_ticks, plan.objective_ticks))
                });
            ratios.extend(solved);
        }
        ratios.sort();
        let solved = ratios.len();
        let mean_ratio =
            (solved > 0).then(|| ratios.iter().map(Ratio::value).sum::<f64>() / solved as f64);
        out.push(ProbePoint {
            label,
            solved,
            total: config.seeds.len(),
            mean_ratio,
            median_ratio: exact_median(&ratios),
            max_ratio: ratios.last().copied(),
        });
    }
    Ok(out)
}

/// Samples arrivals from `model` and keeps the prefix inside
/// `[0, window_ticks]`, letting the draw itself decide the order count. The
/// sampling cap doubles and the draw restarts whenever every arrival landed
/// inside the window, so the count is never clipped; restarts reproduce the
/// same prefix because the stream depends only on the seed. A seed whose
/// first arrival falls beyond the window keeps that single order, so every
/// point solves at least one instance.
fn sample_window_arrivals(
    model: &ArrivalModel,
    window_ticks: u64,
    seed: u64,
) -> Result<(u32, Vec<u64>), InstanceError> {
    let mut cap: u32 = 8;
    loop {
        let draws = sample_arrivals(model, cap, seed)?;
        let within = draws.iter().take_while(|&&t| t <= window_ticks).count();
        if within == cap as usize {
            cap *= 2;
            continue;
        }
        let n = within.max(1);
        return Ok((n as u32, draws[..n].to_vec()));
    }
}

/// Median of sorted ratios; the even case averages the middle two exactly.
fn exact_median(sorted: &[Ratio]) -> Option<Ratio> {
    let m = sorted.len();
    if m == 0 {
        return None;
    }
    if m % 2 == 1 {
        return Some(sorted[m / 2]);
    }
    let a = sorted[m / 2 - 1];
    let b = sorted[m / 2];
    let num = u128::from(a.num) * u128::from(b.den) + u128::from(b.num) * u128::from(a.den);
    let den = 2 * u128::from(a.den) * u128::from(b.den);
    let g = gcd_u128(num, den).max(1);
    let num = u64::try_from(num / g).expect("median numerator fits in 64 bits");
    let den = u64::try_from(den / g).expect("median denominator fits in 64 bits");
    Ratio::new(num, den)
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

// ---------------------------------------------------------------------------
// Adversarial verification
// ---------------------------------------------------------------------------

/// One adversarial instance checked against its construction's closed-form
/// makespans.
#[derive(Clone, Debug)]
pub struct AdversarialCheck {
    pub label: String,
    pub simulated_reopt_ticks: u64,
    pub expected_reopt_ticks: Option<u64>,
    pub solved_ciopt_ticks: u64,
    pub expected_ciopt_ticks: Option<u64>,
    /// True when every expectation the construction carries is met.
    pub matched: bool,
    /// Full simulation trace as JSON, captured only on a mismatch.
    pub trace_json: Option<String>,
}

#[derive(Clone, Debug)]
pub struct AdversarialReport {
    pub checks: Vec<AdversarialCheck>,
    /// Whether the exact reopt/ciopt ratios strictly increase along the
    /// sequence, the signature of a family approaching its envelope.
    pub ratios_strictly_increase: bool,
}

impl AdversarialReport {
    pub fn all_matched(&self) -> bool {
        self.checks.iter().all(|c| c.matched)
    }
}

/// Simulates each adversarial instance under its target system, solves its
/// optimum, and compares both against the closed forms stored in the
/// provenance. Solver failures abort: these constructions are sized to be
/// solvable, so running out of budget is an infrastructure problem.
pub fn verify_adversarial(
    instances: &[Instance],
    budget: &SolverBudget,
) -> Result<AdversarialReport, HarnessError> {
    let mut checks = Vec::with_capacity(instances.len());
    let mut ratios: Vec<Option<Ratio>> = Vec::with_capacity(instances.len());
    for instance in instances {
        let (system, expected_reopt, expected_ciopt) = match &instance.provenance {
            Some(Provenance::Adversarial {
                system,
                expected_reopt_ticks,
                expected_ciopt_ticks,
                ..
            }) => (*system, *expected_reopt_ticks, *expected_ciopt_ticks),
            _ => return Err(HarnessError::NotAdversarial(instance.label())),
        };
        let layout = instance.build_layout()?;
        let trace = simulate(instance, &layout, system, budget)?;
        let plan = solve_ciopt(instance, &layout, system, budget)?;
        let matched = expected_reopt.map_or(true, |e| e == trace.objective_ticks)
            && expected_ciopt.map_or(true, |e| e == plan.objective_ticks);
        let trace_json = if matched {
            None
        } else {
            Some(
                serde_json::to_string_pretty(&trace)
                    .unwrap_or_else(|e| format!("trace serialization failed: {e}")),
            )
        };
        ratios.push(Ratio::new(trace.objective_ticks, plan.objective_ticks));
        checks.push(AdversarialCheck {
            label: instance.label(),
            simulated_reopt_ticks: trace.objective_ticks,
            expected_reopt_ticks: expected_reopt,
            solved_ciopt_ticks: plan.objective_ticks,
            expected_ciopt_ticks: expected_ciopt,
            matched,
            trace_json,
        });
    }
    let ratios_strictly_increase = ratios.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => a < b,
        _ => false,
    });
    Ok(AdversarialReport { checks, ratios_strictly_increase })
}

/// Interventionist-pushcart oscillation sizes whose ratio climbs past 9/5.
pub fn pcart_oscillation_grid() -> Result<Vec<Instance>, InstanceError> {
    [5u64, 7, 9, 11].iter().map(|&k| gen_pcart_oscillation(k, 5, 5, 2)).collect()
}

/// Robot oscillation sizes with the gap widened in step with k so the
/// optimum stays in closed form.
pub fn robot_oscillation_grid() -> Result<Vec<Instance>, InstanceError> {
    [2u64, 3, 4, 5].iter().map(|&k| gen_robot_oscillation(k, 100, 1, 4 * k)).collect()
}

/// Unfortunate-timing sizes for the non-interventionist pushcart, climbing
/// toward the 5/2 envelope.
pub fn pcartn_unfortunate_grid() -> Result<Vec<Instance>, InstanceError> {
    [5u64, 8, 10, 16, 25].iter().map(|&w| gen_pcartn_unfortunate(w, w, 1, 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(num: u64, den: u64) -> Ratio {
        Ratio::new(num, den).expect("nonzero denominator")
    }

    #[test]
    fn ratio_cells_round_half_up_at_any_width() {
        assert_eq!(format_ratio_decimal(ratio(100, 88), 6), "1.136364");
        assert_eq!(format_ratio_decimal(ratio(90, 88), 6), "1.022727");
        assert_eq!(format_ratio_decimal(ratio(7, 4), 6), "1.750000");
        assert_eq!(format_ratio_decimal(ratio(1, 3), 6), "0.333333");
        assert_eq!(format_ratio_decimal(ratio(2, 3), 6), "0.666667");
        // Exactly half a unit in the last place rounds up.
        assert_eq!(format_ratio_decimal(ratio(1, 1_600_000), 6), "0.000001");
        assert_eq!(format_ratio_decimal(ratio(1, 4_000_000), 6), "0.000000");
        assert_eq!(format_ratio_decimal(ratio(5, 4), 1), "1.3");
        assert_eq!(format_ratio_decimal(ratio(9, 4), 0), "2");
        assert_eq!(format_ratio_decimal(ratio(249, 100), 2), "2.49");
    }

    #[test]
    fn csv_rows_are_sorted_and_fields_go_empty_when_unsolved() {
        let records = vec![
            RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Pcart,
                n: 3,
                seed: 1,
                reopt_ticks: Some(100),
                ciopt_ticks: Some(88),
                status: RowStatus::Ok,
            },
            RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Pcart,
                n: 3,
                seed: 2,
                reopt_ticks: None,
                ciopt_ticks: None,
                status: RowStatus::CioptUnsolved,
            },
            RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Robot,
                n: 4,
                seed: 0,
                reopt_ticks: None,
                ciopt_ticks: Some(52),
                status: RowStatus::ReoptUnsolved,
            },
        ];
        let csv = render_csv(&records);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "Base,Pcart,3,1,100,88,1.136364,ok");
        assert_eq!(lines[2], "Base,Pcart,3,2,,,,ciopt_unsolved");
        assert_eq!(lines[3], "Base,Robot,4,0,,52,,reopt_unsolved");
    }

    #[test]
    fn a_tiny_experiment_is_deterministic_across_worker_counts() {
        std::env::remove_var(WORKERS_ENV);
        let base = ExperimentConfig {
            settings: vec![Setting::Base],
            systems: vec![PolicyKind::Pcart],
            n_values: vec![3],
            seeds: vec![0, 1],
            workers: 1,
            ..ExperimentConfig::default()
        };
        let serial = run_experiment(&base).expect("serial run");
        let parallel =
            run_experiment(&ExperimentConfig { workers: 2, ..base }).expect("parallel run");
        assert_eq!(render_csv(&serial.records), render_csv(&parallel.records));
        assert_eq!(serial.records.len(), 2);
        for record in &serial.records {
            assert_eq!(record.status, RowStatus::Ok);
            let q = record.ratio().expect("solved row has a ratio");
            assert!(q >= ratio(1, 1), "online never beats the optimum, got {q}");
        }
        assert!(serial.audit_violations.is_empty());
    }

    #[test]
    fn auditing_a_clean_cell_reports_no_violations() {
        let config = ExperimentConfig {
            settings: vec![Setting::Base],
            systems: vec![PolicyKind::PcartN],
            n_values: vec![3],
            seeds: vec![0, 1],
            workers: 1,
            zero_pick_time: true,
            audit_bounds: true,
            ..ExperimentConfig::default()
        };
        let outcome = run_experiment(&config).expect("audited run");
        assert_eq!(outcome.records.len(), 2);
        assert!(outcome.records.iter().all(|r| r.status == RowStatus::Ok));
        assert!(
            outcome.audit_violations.is_empty(),
            "unexpected violations: {:?}",
            outcome.audit_violations
        );
    }

    #[test]
    fn report_cells_follow_the_solved_count_annotations() {
        let mut records = Vec::new();
        for seed in 0..10u64 {
            // Cell A: fully solved. Cell B: eight solved. Cell C: seven.
            records.push(RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Pcart,
                n: 3,
                seed,
                reopt_ticks: Some(110 + 2 * seed),
                ciopt_ticks: Some(100),
                status: RowStatus::Ok,
            });
            let solved_b = seed < 8;
            records.push(RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Pcart,
                n: 4,
                seed,
                reopt_ticks: solved_b.then_some(120),
                ciopt_ticks: solved_b.then_some(100),
                status: if solved_b { RowStatus::Ok } else { RowStatus::CioptUnsolved },
            });
            let solved_c = seed < 7;
            records.push(RatioRecord {
                setting: Setting::Base,
                system: PolicyKind::Pcart,
                n: 5,
                seed,
                reopt_ticks: solved_c.then_some(130),
                ciopt_ticks: solved_c.then_some(100),
                status: if solved_c { RowStatus::Ok } else { RowStatus::ReoptUnsolved },
            });
        }
        let full = table_cell(&records, Setting::Base, PolicyKind::Pcart, 3);
        assert_eq!(full.solved, 10);
        assert_eq!(full.render_worst(), "1.28");
        assert_eq!(full.render_mean(), "1.19");
        assert!(full.worst.unwrap().value() >= full.mean.unwrap());

        let starred = table_cell(&records, Setting::Base, PolicyKind::Pcart, 4);
        assert_eq!(starred.solved, 8);
        assert_eq!(starred.render_worst(), "1.20*");
        assert_eq!(starred.render_mean(), "1.20*");

        let hidden = table_cell(&records, Setting::Base, PolicyKind::Pcart, 5);
        assert_eq!(hidden.solved, 7);
        assert_eq!(hidden.render_worst(), "--");
        assert_eq!(hidden.render_mean(), "--");

        let report = render_report(&records);
        assert!(report.contains("## Base"));
        assert!(report.contains("| 4 | 1.20* | 1.20* | 8/10 |"));
        assert!(report.contains("| 5 | -- | -- | 7/10 |"));
        assert!(report.contains("Spearman n vs ratio, Pcart:"));
    }

    #[test]
    fn spearman_matches_hand_computed_cases() {
        // Strictly decreasing: rho is exactly -1 and p collapses to zero.
        let xs = [1u64, 2, 3, 4, 5];
        let ys = [ratio(5, 1), ratio(4, 1), ratio(3, 1), ratio(2, 1), ratio(1, 1)];
        match spearman(&xs, &ys) {
            SpearmanResult::Computed { rho, p_value } => {
                assert!((rho + 1.0).abs() < 1e-12);
                assert_eq!(p_value, 0.0);
            }
            other => panic!("expected a computed result, got {other:?}"),
        }
        // Only the two perfectly monotone orderings of five distinct values
        // reach |rho| = 1, so the exact permutation p-value is 2/120.
        let p = spearman_exact_permutation(&xs, &ys).expect("within permutation range");
        assert!((p - 2.0 / 120.0).abs() < 1e-12, "p = {p}");

        // Constant y margin has zero rank variance.
        let flat = [ratio(2, 1); 5];
        assert_eq!(spearman(&xs, &flat), SpearmanResult::Undefined);
        assert_eq!(spearman(&xs[..2], &ys[..2]), SpearmanResult::Undefined);

        // Tied xs get average ranks: xs (1,1,2) vs ys (3,2,1) pairs the
        // shared rank 1.5 against ranks 3 and 2. Hand-evaluating Pearson on
        // ranks (1.5, 1.5, 3) and (3, 2, 1) gives -sqrt(3)/2.
        let tied = spearman(&[1, 1, 2], &[ratio(3, 1), ratio(2, 1), ratio(1, 1)]);
        match tied {
            SpearmanResult::Computed { rho, .. } => {
                assert!((rho + 3f64.sqrt() / 2.0).abs() < 1e-12, "rho = {rho}");
            }
            other => panic!("expected a computed result, got {other:?}"),
        }
    }

    #[test]
    fn probe_points_carry_exact_medians() {
        std::env::remove_var(WORKERS_ENV);
        let config = ProbeConfig {
            mode: ProbeMode::OrderStatistics {
                distribution: ArrivalDistribution::Uniform { horizon_ticks: 2_000 },
                n_values: vec![2, 3],
            },
            setting: Setting::Base,
            system: PolicyKind::Pcart,
            seeds: vec![0, 1],
            budget: SolverBudget::desk(),
        };
        let points = convergence_probe(&config).expect("probe run");
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].label, "n=2");
        for point in &points {
            assert_eq!(point.solved, 2);
            assert_eq!(point.total, 2);
            let median = point.median_ratio.expect("solved point has a median");
            let max = point.max_ratio.expect("solved point has a max");
            assert!(median <= max);
            assert!(point.mean_ratio.unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn window_sampling_doubles_its_cap_and_keeps_one_late_order() {
        let model = ArrivalModel::Poisson { rate_per_shift: 360.0, shift_ticks: SHIFT_TICKS };
        // A full-shift window swallows the whole initial cap of eight draws,
        // forcing doublings until one arrival falls beyond it.
        let (n, arrivals) = sample_window_arrivals(&model, SHIFT_TICKS, 7).expect("sampling");
        assert_eq!(n as usize, arrivals.len());
        assert!(n > 8, "expected more than one cap of arrivals, got {n}");
        assert!(arrivals.iter().all(|&t| t <= SHIFT_TICKS));
        assert!(arrivals.windows(2).all(|w| w[0] <= w[1]));
        let again = sample_window_arrivals(&model, SHIFT_TICKS, 7).expect("sampling");
        assert_eq!(again, (n, arrivals.clone()));
        // A narrower window keeps a prefix of the same stream, draw for draw.
        let (m, prefix) = sample_window_arrivals(&model, SHIFT_TICKS / 30, 7).expect("sampling");
        assert!(m < n);
        assert_eq!(prefix[..], arrivals[..m as usize]);
        // A window before the first arrival still keeps that one order.
        let (lone, kept) = sample_window_arrivals(&model, 0, 7).expect("sampling");
        assert_eq!(lone, 1);
        assert_eq!(kept[0], arrivals[0]);
    }

    #[test]
    fn even_sized_medians_average_the_middle_pair_exactly() {
        let mut values = vec![ratio(1, 1), ratio(3, 2), ratio(2, 1), ratio(4, 1)];
        values.sort();
        assert_eq!(exact_median(&values), Some(ratio(7, 4)));
        assert_eq!(exact_median(&values[..3]), Some(ratio(3, 2)));
        assert_eq!(exact_median(&[]), None);
    }

    #[test]
    fn adversarial_examples_verify_and_tampering_is_caught() {
        let instances = vec![gen_pcart_oscillation(5, 5, 5, 8).expect("example sizes")];
        let report =
            verify_adversarial(&instances, &SolverBudget::desk()).expect("verification run");
        assert!(report.all_matched());
        assert!(report.ratios_strictly_increase);
        assert_eq!(report.checks[0].simulated_reopt_ticks, 184);
        assert_eq!(report.checks[0].solved_ciopt_ticks, 120);
        assert!(report.checks[0].trace_json.is_none());

        let mut tampered = instances;
        if let Some(Provenance::Adversarial { expected_reopt_ticks, .. }) =
            tampered[0].provenance.as_mut()
        {
            *expected_reopt_ticks = Some(185);
        }
        let report =
            verify_adversarial(&tampered, &SolverBudget::desk()).expect("verification run");
        assert!(!report.all_matched());
        assert!(report.checks[0].trace_json.is_some(), "mismatch must dump the trace");

        let plain = vec![crate::instance::illustrative_fixture()];
        assert!(matches!(
            verify_adversarial(&plain, &SolverBudget::desk()),
            Err(HarnessError::NotAdversarial(_))
        ));
    }

    #[test]
    fn worker_resolution_prefers_env_then_config() {
        assert_eq!(resolve_workers(Some("4"), 2), 4);
        assert_eq!(resolve_workers(Some(" 8 "), 2), 8);
        assert_eq!(resolve_workers(Some("zero"), 2), 2);
        assert_eq!(resolve_workers(Some("0"), 2), 2);
        assert_eq!(resolve_workers(None, 3), 3);
        assert!(resolve_workers(None, 0) >= 1);
    }

    #[test]
    fn empty_grids_are_rejected() {
        let config = ExperimentConfig { seeds: Vec::new(), ..ExperimentConfig::default() };
        assert!(matches!(run_experiment(&config), Err(HarnessError::EmptyGrid("seeds"))));
        let config = ExperimentConfig { systems: Vec::new(), ..ExperimentConfig::default() };
        assert!(matches!(run_experiment(&config), Err(HarnessError::EmptyGrid("systems"))));
    }
}
