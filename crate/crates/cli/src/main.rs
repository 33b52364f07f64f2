use std::fmt::Write as _;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand};

use pipette_core::bench::{
    self, budget_sweep, correlation_study, run_benchmark, write_sweep_csv, BenchConfig,
    BenchReport, CorrelationConfig, Preset, SweepConfig, SWEEP_HEADER,
};
use pipette_core::cost::cycles_required;
use pipette_core::par;
use pipette_core::schedulers::{schedule_greedy, schedule_lap, schedule_row_major};
use pipette_core::simulator::simulate;
use pipette_core::solver::schedule_to_worklist;
use pipette_core::task::{validate_task, FORMAT_VERSION};
use pipette_core::{
    job_distance_matrix_for, jobs_of, parse_task_csv, parse_worklist_csv, solve, Method,
    PlateFormat, SimParams, SolveBudget, TimingParams, WorkList, DEFAULT_CAPACITY,
};

const THREADS_ENV: &str = "PIPETTE_ROUTER_THREADS";

#[derive(Parser)]
#[command(name = "pipette-router", version, about = "Order liquid transfers for an 8-channel pipette")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule a task file into a work list
    Schedule(ScheduleArgs),
    /// Simulate the execution time of a work list
    Simulate(SimulateArgs),
    /// Generate a random task
    Gen(GenArgs),
    /// Compare scheduling methods over random tasks
    Bench(BenchArgs),
    /// Correlate computed and simulated time over random orderings
    Correlate(CorrelateArgs),
    /// Solver objective as a function of budget
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TimingArgs {
    /// Fixed cost of a non-adjacent source access
    #[arg(long, default_value_t = 1.0)]
    t134_src: f64,
    /// Source aspiration speed in the cost model
    #[arg(long, default_value_t = 100.0)]
    q_src: f64,
    #[arg(long, default_value_t = 1.0)]
    t134_dst: f64,
    #[arg(long, default_value_t = 100.0)]
    q_dst: f64,
}

impl TimingArgs {
    fn params(&self) -> Result<TimingParams, CliError> {
        let t = TimingParams {
            t134_src: self.t134_src,
            q_src: self.q_src,
            t134_dst: self.t134_dst,
            q_dst: self.q_dst,
        };
        t.validate().map_err(CliError::Usage)?;
        Ok(t)
    }
}

#[derive(Args)]
struct SimArgs {
    /// µL/s
    #[arg(long, default_value_t = 100.0)]
    aspirate_speed: f64,
    /// µL/s
    #[arg(long, default_value_t = 100.0)]
    dispense_speed: f64,
    #[arg(long, default_value_t = 0.5)]
    aspirate_delay: f64,
    #[arg(long, default_value_t = 0.5)]
    dispense_delay: f64,
    #[arg(long, default_value_t = 0.25)]
    tip_travel: f64,
    #[arg(long, default_value_t = 0.25)]
    arm_move: f64,
    #[arg(long, default_value_t = 10.0)]
    wash_time: f64,
}

impl SimArgs {
    fn params(&self) -> Result<SimParams, CliError> {
        let p = SimParams {
            aspirate_speed: self.aspirate_speed,
            dispense_speed: self.dispense_speed,
            aspirate_delay: self.aspirate_delay,
            dispense_delay: self.dispense_delay,
            tip_travel: self.tip_travel,
            arm_move: self.arm_move,
            wash_time: self.wash_time,
        };
        p.validate().map_err(CliError::Usage)?;
        Ok(p)
    }
}

#[derive(Args)]
struct ScheduleArgs {
    /// Task CSV, or `-` for stdin
    task: PathBuf,
    #[arg(long)]
    src_plate: PlateFormat,
    #[arg(long)]
    dst_plate: PlateFormat,
    #[arg(long, default_value = "cvrp")]
    method: Method,
    /// `20s` (wall clock) or `5000000i` (iterations)
    #[arg(long, default_value = "20s")]
    budget: SolveBudget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    capacity: usize,
    #[command(flatten)]
    timing: TimingArgs,
    /// Work-list CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Work-list CSV, or `-` for stdin
    worklist: PathBuf,
    #[arg(long)]
    src_plate: Option<PlateFormat>,
    #[arg(long)]
    dst_plate: Option<PlateFormat>,
    #[arg(long, default_value_t = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    capacity: usize,
    #[command(flatten)]
    sim: SimArgs,
    /// Per-cycle CSV path
    #[arg(long)]
    detail: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    src_plate: PlateFormat,
    #[arg(long)]
    dst_plate: PlateFormat,
    /// Number of transfers
    #[arg(short = 'm', long = "transfers")]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `quick` or `full`; overrides the grid flags
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long, default_value = "96")]
    src_plate: PlateFormat,
    #[arg(long, default_value = "96")]
    dst_plate: PlateFormat,
    /// Comma-separated transfer counts; default 1x..10x the destination wells
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "row-major,lap,greedy,cvrp")]
    methods: Vec<Method>,
    /// Solver budget; bare numbers are seconds-equivalent iterations
    #[arg(long, default_value = "20", value_parser = parse_sweep_budget)]
    budget: SolveBudget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    capacity: usize,
    #[command(flatten)]
    timing: TimingArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Per-replicate report; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mean/std summary CSV
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long, default_value = "96")]
    src_plate: PlateFormat,
    #[arg(long, default_value = "96")]
    dst_plate: PlateFormat,
    #[arg(short = 'm', long = "transfers")]
    m: usize,
    #[arg(long, default_value_t = 30)]
    orders: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    capacity: usize,
    #[command(flatten)]
    timing: TimingArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "96")]
    src_plate: PlateFormat,
    #[arg(long, default_value = "96")]
    dst_plate: PlateFormat,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// `start:end:step` in seconds-equivalent, or a comma list such as `1000i,2000i`
    #[arg(long, default_value = "2:40:2")]
    budgets: String,
    #[arg(long, default_value_t = 6)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    capacity: usize,
    #[command(flatten)]
    timing: TimingArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Invalid(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Invalid(e)
    }
}

fn parse_capacity(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("capacity must be a positive integer, got `{s}`")),
    }
}

/// Budget token where a bare number means seconds-equivalent iterations.
fn parse_sweep_budget(s: &str) -> Result<SolveBudget, String> {
    match s.trim().parse::<f64>() {
        Ok(secs) if secs > 0.0 && secs.is_finite() => Ok(SolveBudget::seconds_equivalent(secs)),
        Ok(_) => Err(format!("budget must be > 0, got `{s}`")),
        Err(_) => s.parse::<SolveBudget>(),
    }
}

fn parse_budget_list(spec: &str) -> Result<Vec<SolveBudget>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad budget range `{spec}`"))
        };
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(start > 0.0 && step > 0.0 && end >= start) {
            return Err(format!("bad budget range `{spec}`"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n)
            .map(|k| SolveBudget::seconds_equivalent(start + k as f64 * step))
            .collect());
    }
    spec.split(',').map(parse_sweep_budget).collect()
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

/// Writes to `path`, or to stdout when `None`. Returns whether stdout was used.
fn write_output(path: Option<&Path>, content: &str) -> anyhow::Result<bool> {
    match path {
        Some(p) => {
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))?;
            Ok(false)
        }
        None => {
            print!("{content}");
            Ok(true)
        }
    }
}

/// Status lines go to stderr when stdout carries CSV.
fn status(stdout_taken: bool, line: &str) {
    if stdout_taken {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn cmd_schedule(a: &ScheduleArgs) -> Result<(), CliError> {
    let timing = a.timing.params()?;
    let raw = read_input(&a.task)?;
    let task = parse_task_csv(&raw, Some(a.src_plate), Some(a.dst_plate))
        .map_err(|e| anyhow!("invalid task: {e}"))?;
    let violations = validate_task(&task);
    if !violations.is_empty() {
        let mut msg = String::from("invalid task:");
        for v in &violations {
            write!(msg, "\n  {v}").unwrap();
        }
        return Err(anyhow!(msg).into());
    }
    let jobs = jobs_of(&task);
    let d = job_distance_matrix_for(&jobs, &timing);
    let wl = if jobs.is_empty() {
        WorkList::from_cycles(a.src_plate, a.dst_plate, Vec::new(), None)
    } else {
        match a.method {
            Method::RowMajor => schedule_row_major(&jobs, a.capacity),
            Method::Lap => schedule_lap(&jobs, a.capacity),
            Method::Greedy => schedule_greedy(&jobs, &d, a.seed, a.capacity),
            Method::Cvrp => {
                let s = solve(&d, a.capacity, a.budget, a.seed).map_err(anyhow::Error::from)?;
                schedule_to_worklist(&s, &jobs).map_err(anyhow::Error::from)?
            }
        }
    };
    let computed = wl.computed_time(&jobs, &d).map_err(anyhow::Error::from)?;
    let used_stdout = write_output(a.out.as_deref(), &wl.to_csv())?;
    status(
        used_stdout,
        &format!(
            "method={} m={} K={} computed_time_s={computed:.6}",
            a.method,
            jobs.len(),
            cycles_required(jobs.len(), a.capacity)
        ),
    );
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let p = a.sim.params()?;
    let raw = read_input(&a.worklist)?;
    let wl = parse_worklist_csv(&raw, a.src_plate, a.dst_plate)
        .map_err(|e| anyhow!("invalid work list: {e}"))?;
    let report = simulate(&wl, &p, a.capacity);
    if let Some(path) = &a.detail {
        write_output(Some(path), &report.to_csv())?;
    }
    println!("{}", report.summary());
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let task = bench::random_task(a.src_plate, a.dst_plate, a.m, a.seed).map_err(anyhow::Error::from)?;
    let used_stdout = write_output(a.out.as_deref(), &task.to_csv())?;
    status(used_stdout, &format!("transfers={} seed={}", task.len(), a.seed));
    Ok(())
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let timing = a.timing.params()?;
    let sim = a.sim.params()?;
    let configs = match a.preset {
        Some(preset) => preset.configs(a.seed),
        None => {
            let mut cfg = BenchConfig::new(a.src_plate, a.dst_plate, 10);
            if !a.sizes.is_empty() {
                cfg.sizes = a.sizes.clone();
            }
            cfg.replicates = a.replicates;
            cfg.methods = a.methods.clone();
            cfg.budget = a.budget;
            cfg.master_seed = a.seed;
            vec![cfg]
        }
    };
    let configs: Vec<BenchConfig> = configs
        .into_iter()
        .map(|mut c| {
            c.capacity = a.capacity;
            c.timing = timing;
            c.sim = sim;
            c
        })
        .collect();
    for c in &configs {
        c.validate().map_err(anyhow::Error::from)?;
    }

    let reports = par::with_threads(thread_cap()?, || {
        configs.iter().map(run_benchmark).collect::<Result<Vec<BenchReport>, _>>()
    })
    .map_err(anyhow::Error::from)?;

    let mut rows = String::new();
    let mut summary = String::new();
    for (i, r) in reports.iter().enumerate() {
        r.write_csv(&mut rows, i == 0);
        r.write_summary_csv(&mut summary, i == 0);
    }
    let used_stdout = write_output(a.out.as_deref(), &rows)?;
    if let Some(path) = &a.summary {
        write_output(Some(path), &summary)?;
    }
    let mut table = format!("{:<10} {:<10} {:>6} {:>12} {:>12}", "plates", "method", "size", "computed", "simulated");
    for r in &reports {
        for s in r.summary() {
            write!(
                table,
                "\n{:<10} {:<10} {:>6} {:>12.3} {:>12.3}",
                format!("{}->{}", r.src_plate, r.dst_plate),
                s.method.report_label(),
                s.size,
                s.mean_computed,
                s.mean_simulated
            )
            .unwrap();
        }
    }
    status(used_stdout, &table);
    Ok(())
}

fn cmd_correlate(a: &CorrelateArgs) -> Result<(), CliError> {
    let mut cfg = CorrelationConfig::new(a.src_plate, a.dst_plate, a.m, a.orders);
    cfg.seed = a.seed;
    cfg.capacity = a.capacity;
    cfg.timing = a.timing.params()?;
    cfg.sim = a.sim.params()?;
    let report = correlation_study(&cfg).map_err(anyhow::Error::from)?;
    let used_stdout = write_output(a.out.as_deref(), &report.to_csv())?;
    status(
        used_stdout,
        &format!(
            "orders={} pearson_r={:.6} r_squared={:.6}",
            report.samples.len(),
            report.pearson_r,
            report.r_squared
        ),
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let budgets = parse_budget_list(&a.budgets).map_err(CliError::Usage)?;
    let timing = a.timing.params()?;
    let threads = thread_cap()?;
    let mut out = format!("#version={FORMAT_VERSION}\n{SWEEP_HEADER}\n");
    let mut table = format!("{:>9} {:>14} {:>14} {:>12}", "transfers", "budget", "mean", "std");
    for &m in &a.sizes {
        let cfg = SweepConfig {
            src_plate: a.src_plate,
            dst_plate: a.dst_plate,
            transfers: m,
            budgets: budgets.clone(),
            replicates: a.replicates,
            seed: a.seed,
            capacity: a.capacity,
            timing,
        };
        let rows = par::with_threads(threads, || budget_sweep(&cfg)).map_err(anyhow::Error::from)?;
        write_sweep_csv(&mut out, m, &rows);
        for r in &rows {
            write!(
                table,
                "\n{m:>9} {:>14} {:>14.3} {:>12.3}",
                r.budget.to_string(),
                r.mean_objective,
                r.std_objective
            )
            .unwrap();
        }
    }
    let used_stdout = write_output(a.out.as_deref(), &out)?;
    status(used_stdout, &table);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Schedule(a) => cmd_schedule(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            Cli::command()
                .error(clap::error::ErrorKind::ValueValidation, msg)
                .exit();
        }
        Err(CliError::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
