//! Seeded random tasks and reproducible experiments: method comparison over
//! task sizes, proxy-vs-simulation correlation, and solver budget sweeps.
//!
//! Every row is a pure function of the configuration when the solver runs
//! under an iteration budget. Rows are computed in parallel and then sorted
//! into a canonical order, so thread count never changes the output.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{job_distance_matrix, JobDistanceMatrix, TimingParams, DEFAULT_CAPACITY};
use crate::error::BenchError;
use crate::par::{self, Execution};
use crate::plate::{PlateFormat, WellDistanceMatrix};
use crate::schedulers::{schedule_greedy, schedule_lap, schedule_row_major};
use crate::simulator::{simulate_with, SimParams};
use crate::solver::{schedule_to_worklist, solve, solve_traced, SolveBudget, ITERATIONS_PER_SECOND};
use crate::task::{jobs_of, JobSet, TaskMatrix, FORMAT_VERSION};
use crate::worklist::{Method, WorkList};

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of tags.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(parent), |acc, &t| mix(acc ^ mix(t)))
}

const TAG_GREEDY: u64 = 0x6772_6565_6479;
const TAG_CVRP: u64 = 0x6376_7270;
const TAG_ORDERS: u64 = 0x6f72_6465_7273;

/// `m` distinct (source, destination) pairs drawn uniformly without
/// replacement, each with a volume uniform on [1, 100] µL rounded to 0.001.
pub fn random_task(
    src: PlateFormat,
    dst: PlateFormat,
    m: usize,
    seed: u64,
) -> Result<TaskMatrix, BenchError> {
    let cells = src.wells() as usize * dst.wells() as usize;
    if m > cells {
        return Err(BenchError::TooManyTransfers { m, cells });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, cells, m).into_vec();
    picks.sort_unstable();
    let n_dst = dst.wells() as usize;
    let mut task = TaskMatrix::new(src, dst);
    for cell in picks {
        let volume: f64 = rng.gen_range(1.0..=100.0);
        let volume = ((volume * 1000.0).round() / 1000.0).clamp(1.0, 100.0);
        task.insert((cell / n_dst + 1) as u32, (cell % n_dst + 1) as u32, volume);
    }
    Ok(task)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Pearson correlation coefficient; NaN when either series is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Everything needed to evaluate schedules of one task.
pub struct Instance {
    pub task: TaskMatrix,
    pub jobs: JobSet,
    pub distances: JobDistanceMatrix,
    src_d: WellDistanceMatrix,
    dst_d: WellDistanceMatrix,
}

impl Instance {
    pub fn new(task: TaskMatrix, timing: &TimingParams) -> Self {
        let jobs = jobs_of(&task);
        let src_d = WellDistanceMatrix::new(task.src_plate());
        let dst_d = WellDistanceMatrix::new(task.dst_plate());
        let distances = job_distance_matrix(&jobs, &src_d, &dst_d, timing);
        Self {
            task,
            jobs,
            distances,
            src_d,
            dst_d,
        }
    }

    pub fn simulated_time(&self, wl: &WorkList, sim: &SimParams, capacity: usize) -> f64 {
        simulate_with(wl, &self.src_d, &self.dst_d, sim, capacity).total_time
    }

    /// Runs one scheduling method. `seed` drives greedy and cvrp.
    pub fn schedule(
        &self,
        method: Method,
        capacity: usize,
        budget: SolveBudget,
        seed: u64,
    ) -> Result<(WorkList, f64), BenchError> {
        let started = Instant::now();
        let wl = match method {
            Method::RowMajor => schedule_row_major(&self.jobs, capacity),
            Method::Lap => schedule_lap(&self.jobs, capacity),
            Method::Greedy => schedule_greedy(&self.jobs, &self.distances, seed, capacity),
            Method::Cvrp => {
                let s = solve(&self.distances, capacity, budget, seed)?;
                let secs = match budget {
                    SolveBudget::Iterations(_) => {
                        s.stats.iterations as f64 / ITERATIONS_PER_SECOND as f64
                    }
                    SolveBudget::WallClock(_) => started.elapsed().as_secs_f64(),
                };
                return Ok((schedule_to_worklist(&s, &self.jobs)?, secs));
            }
        };
        Ok((wl, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub src_plate: PlateFormat,
    pub dst_plate: PlateFormat,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub budget: SolveBudget,
    pub master_seed: u64,
    pub capacity: usize,
    pub timing: TimingParams,
    pub sim: SimParams,
}

impl BenchConfig {
    /// Sizes 1x..=`multiples`x the destination well count.
    pub fn new(src_plate: PlateFormat, dst_plate: PlateFormat, multiples: usize) -> Self {
        let n = dst_plate.wells() as usize;
        Self {
            src_plate,
            dst_plate,
            sizes: (1..=multiples).map(|k| k * n).collect(),
            replicates: 3,
            methods: Method::ALL.to_vec(),
            budget: SolveBudget::seconds_equivalent(20.0),
            master_seed: 0,
            capacity: DEFAULT_CAPACITY,
            timing: TimingParams::default(),
            sim: SimParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let cells = self.src_plate.wells() as usize * self.dst_plate.wells() as usize;
        if let Some(&m) = self.sizes.iter().find(|&&m| m > cells) {
            return Err(BenchError::TooManyTransfers { m, cells });
        }
        if self.replicates == 0 {
            return Err(BenchError::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.capacity == 0 {
            return Err(BenchError::InvalidConfig("capacity must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::InvalidConfig("no methods selected".into()));
        }
        self.timing.validate().map_err(BenchError::InvalidConfig)?;
        self.sim.validate().map_err(BenchError::InvalidConfig)?;
        Ok(())
    }

    pub fn task_seed(&self, size: usize, replicate: usize) -> u64 {
        derive_seed(self.master_seed, &[size as u64, replicate as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Quick,
    Full,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Preset::Quick),
            "full" => Ok(Preset::Full),
            other => Err(format!("unknown preset `{other}` (expected quick or full)")),
        }
    }
}

impl Preset {
    /// `quick`: 3 plate pairs x 3 sizes x 2 replicates, 2 s-equivalent
    /// solves. `full`: the 10 plate pairs over {12, 24, 96, 384} with
    /// source <= destination, sizes 1x..10x, 3 replicates, 20 s-equivalent.
    pub fn configs(self, master_seed: u64) -> Vec<BenchConfig> {
        let named = |n| PlateFormat::named(n).expect("named plate");
        match self {
            Preset::Quick => [(12, 12), (96, 96), (96, 384)]
                .into_iter()
                .map(|(s, d)| {
                    let mut cfg = BenchConfig::new(named(s), named(d), 3);
                    cfg.replicates = 2;
                    cfg.budget = SolveBudget::seconds_equivalent(2.0);
                    cfg.master_seed = master_seed;
                    cfg
                })
                .collect(),
            Preset::Full => {
                let formats = [12, 24, 96, 384];
                let mut out = Vec::new();
                for (i, &s) in formats.iter().enumerate() {
                    for &d in &formats[i..] {
                        let mut cfg = BenchConfig::new(named(s), named(d), 10);
                        cfg.master_seed = master_seed;
                        out.push(cfg);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub size: usize,
    pub replicate: usize,
    pub computed_time: f64,
    pub simulated_time: f64,
    pub solve_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub src_plate: PlateFormat,
    pub dst_plate: PlateFormat,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub size: usize,
    pub n: usize,
    pub mean_computed: f64,
    pub std_computed: f64,
    pub mean_simulated: f64,
    pub std_simulated: f64,
}

impl BenchReport {
    pub const HEADER: &'static str =
        "src_plate,dst_plate,method,size,replicate,computed_time,simulated_time,solve_seconds,error";
    pub const SUMMARY_HEADER: &'static str =
        "src_plate,dst_plate,method,size,n,mean_computed,std_computed,mean_simulated,std_simulated";

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchRow> + '_ {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Mean and standard deviation per (method, size) over successful rows.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(Method, usize)> = self.rows.iter().map(|r| (r.method, r.size)).collect();
        keys.dedup();
        keys.into_iter()
            .map(|(method, size)| {
                let ok: Vec<&BenchRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.size == size && r.error.is_none())
                    .collect();
                let computed: Vec<f64> = ok.iter().map(|r| r.computed_time).collect();
                let simulated: Vec<f64> = ok.iter().map(|r| r.simulated_time).collect();
                SummaryRow {
                    method,
                    size,
                    n: ok.len(),
                    mean_computed: mean(&computed),
                    std_computed: std_dev(&computed),
                    mean_simulated: mean(&simulated),
                    std_simulated: std_dev(&simulated),
                }
            })
            .collect()
    }

    /// Writes the rows. `include_header` lets several reports share a file.
    pub fn write_csv(&self, out: &mut String, include_header: bool) {
        if include_header {
            writeln!(out, "#version={FORMAT_VERSION}").unwrap();
            writeln!(out, "{}", Self::HEADER).unwrap();
        }
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6},{}",
                self.src_plate,
                self.dst_plate,
                r.method.report_label(),
                r.size,
                r.replicate,
                r.computed_time,
                r.simulated_time,
                r.solve_seconds,
                r.error.as_deref().unwrap_or("").replace(',', ";")
            )
            .unwrap();
        }
    }

    pub fn write_summary_csv(&self, out: &mut String, include_header: bool) {
        if include_header {
            writeln!(out, "#version={FORMAT_VERSION}").unwrap();
            writeln!(out, "{}", Self::SUMMARY_HEADER).unwrap();
        }
        for s in self.summary() {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                self.src_plate,
                self.dst_plate,
                s.method.report_label(),
                s.size,
                s.n,
                s.mean_computed,
                s.std_computed,
                s.mean_simulated,
                s.std_simulated
            )
            .unwrap();
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        self.write_csv(&mut out, true);
        out
    }
}

fn run_unit(cfg: &BenchConfig, size: usize, replicate: usize) -> Vec<BenchRow> {
    let seed = cfg.task_seed(size, replicate);
    let task = random_task(cfg.src_plate, cfg.dst_plate, size, seed).expect("validated size");
    let inst = Instance::new(task, &cfg.timing);
    cfg.methods
        .iter()
        .map(|&method| {
            let method_seed = match method {
                Method::Greedy => derive_seed(seed, &[TAG_GREEDY]),
                _ => derive_seed(seed, &[TAG_CVRP]),
            };
            let mut row = BenchRow {
                method,
                size,
                replicate,
                computed_time: f64::NAN,
                simulated_time: f64::NAN,
                solve_seconds: 0.0,
                error: None,
            };
            let outcome = inst
                .schedule(method, cfg.capacity, cfg.budget, method_seed)
                .and_then(|(wl, secs)| {
                    let computed = wl.computed_time(&inst.jobs, &inst.distances)?;
                    Ok((wl, secs, computed))
                });
            match outcome {
                Ok((wl, secs, computed)) => {
                    row.computed_time = computed;
                    row.simulated_time = inst.simulated_time(&wl, &cfg.sim, cfg.capacity);
                    row.solve_seconds = secs;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    run_benchmark_with(cfg, Execution::Parallel)
}

/// [`run_benchmark`] with an explicit execution mode.
pub fn run_benchmark_with(cfg: &BenchConfig, exec: Execution) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let units: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| (0..cfg.replicates).map(move |r| (s, r)))
        .collect();
    let mut rows: Vec<BenchRow> = par::map_with(exec, units, |(s, r)| run_unit(cfg, s, r))
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.method, r.size, r.replicate));
    Ok(BenchReport {
        src_plate: cfg.src_plate,
        dst_plate: cfg.dst_plate,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// (computed time, simulated time) per random order.
    pub samples: Vec<(f64, f64)>,
    pub pearson_r: f64,
    pub r_squared: f64,
}

impl CorrelationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "#version={FORMAT_VERSION}").unwrap();
        writeln!(out, "#pearson_r={:.6}", self.pearson_r).unwrap();
        writeln!(out, "#r_squared={:.6}", self.r_squared).unwrap();
        writeln!(out, "order_id,computed_time,simulated_time").unwrap();
        for (i, (c, s)) in self.samples.iter().enumerate() {
            writeln!(out, "{},{c:.6},{s:.6}", i + 1).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationConfig {
    pub src_plate: PlateFormat,
    pub dst_plate: PlateFormat,
    pub transfers: usize,
    pub orders: usize,
    pub seed: u64,
    pub capacity: usize,
    pub timing: TimingParams,
    pub sim: SimParams,
}

impl CorrelationConfig {
    pub fn new(src_plate: PlateFormat, dst_plate: PlateFormat, transfers: usize, orders: usize) -> Self {
        Self {
            src_plate,
            dst_plate,
            transfers,
            orders,
            seed: 0,
            capacity: DEFAULT_CAPACITY,
            timing: TimingParams::default(),
            sim: SimParams::default(),
        }
    }
}

/// Computed vs simulated time over `orders` distinct random orderings of
/// one random task.
pub fn correlation_study(cfg: &CorrelationConfig) -> Result<CorrelationReport, BenchError> {
    if cfg.orders < 3 {
        return Err(BenchError::InvalidConfig("need at least 3 orders".into()));
    }
    if cfg.capacity == 0 {
        return Err(BenchError::InvalidConfig("capacity must be >= 1".into()));
    }
    let task = random_task(cfg.src_plate, cfg.dst_plate, cfg.transfers, cfg.seed)?;
    let inst = Instance::new(task, &cfg.timing);
    let m = inst.jobs.len();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_ORDERS]));
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(cfg.orders);
    let mut attempts = 0;
    while orders.len() < cfg.orders {
        let mut order: Vec<usize> = (1..=m).collect();
        order.shuffle(&mut rng);
        if orders.contains(&order) {
            attempts += 1;
            if attempts > 64 {
                return Err(BenchError::InvalidConfig(format!(
                    "cannot draw {} distinct orders of {m} transfers",
                    cfg.orders
                )));
            }
            continue;
        }
        orders.push(order);
    }

    let samples: Vec<(f64, f64)> = par::map(orders, |order| {
        let wl = WorkList::from_order(&inst.jobs, &order, cfg.capacity, None).expect("permutation");
        let computed = inst.distances.cycles_cost(&wl.job_cycles(&inst.jobs).expect("permutation"));
        (computed, inst.simulated_time(&wl, &cfg.sim, cfg.capacity))
    });
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let r = pearson(&xs, &ys);
    Ok(CorrelationReport {
        samples,
        pearson_r: r,
        r_squared: r * r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub budget: SolveBudget,
    pub mean_objective: f64,
    pub std_objective: f64,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub src_plate: PlateFormat,
    pub dst_plate: PlateFormat,
    pub transfers: usize,
    /// Ascending.
    pub budgets: Vec<SolveBudget>,
    pub replicates: usize,
    pub seed: u64,
    pub capacity: usize,
    pub timing: TimingParams,
}

pub const SWEEP_HEADER: &str = "transfers,budget,seconds_equivalent,mean_objective,std_objective";

/// Appends sweep rows for one transfer count. Write [`SWEEP_HEADER`] first.
pub fn write_sweep_csv(out: &mut String, transfers: usize, rows: &[SweepRow]) {
    for r in rows {
        let secs = match r.budget {
            SolveBudget::Iterations(n) => n as f64 / ITERATIONS_PER_SECOND as f64,
            SolveBudget::WallClock(d) => d.as_secs_f64(),
        };
        writeln!(
            out,
            "{transfers},{},{secs:.3},{:.6},{:.6}",
            r.budget, r.mean_objective, r.std_objective
        )
        .unwrap();
    }
}

/// Solves the same replicate tasks under each budget. Iteration budgets
/// share one traced run per replicate, which gives exactly the objectives
/// separate runs would.
pub fn budget_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, BenchError> {
    if cfg.budgets.is_empty() || cfg.replicates == 0 {
        return Err(BenchError::InvalidConfig("need at least one budget and replicate".into()));
    }
    let key = |b: &SolveBudget| match b {
        SolveBudget::Iterations(n) => (0, *n as f64),
        SolveBudget::WallClock(d) => (1, d.as_secs_f64()),
    };
    if cfg.budgets.windows(2).any(|w| key(&w[0]) >= key(&w[1])) {
        return Err(BenchError::InvalidConfig("budgets must be strictly ascending".into()));
    }
    let all_iterations = cfg.budgets.iter().all(SolveBudget::is_deterministic);

    let per_replicate: Vec<Result<Vec<f64>, BenchError>> =
        par::map((0..cfg.replicates).collect(), |rep| {
            let seed = derive_seed(cfg.seed, &[cfg.transfers as u64, rep as u64]);
            let task = random_task(cfg.src_plate, cfg.dst_plate, cfg.transfers, seed)?;
            let inst = Instance::new(task, &cfg.timing);
            let solve_seed = derive_seed(seed, &[TAG_CVRP]);
            if all_iterations {
                let checkpoints: Vec<u64> = cfg
                    .budgets
                    .iter()
                    .map(|b| match b {
                        SolveBudget::Iterations(n) => *n,
                        SolveBudget::WallClock(_) => unreachable!(),
                    })
                    .collect();
                let last = *cfg.budgets.last().expect("non-empty");
                let (_, trace) =
                    solve_traced(&inst.distances, cfg.capacity, last, solve_seed, &checkpoints)?;
                Ok(trace)
            } else {
                cfg.budgets
                    .iter()
                    .map(|&b| {
                        solve(&inst.distances, cfg.capacity, b, solve_seed)
                            .map(|s| s.objective)
                            .map_err(BenchError::from)
                    })
                    .collect()
            }
        });
    let per_replicate = per_replicate.into_iter().collect::<Result<Vec<_>, _>>()?;

    Ok(cfg
        .budgets
        .iter()
        .enumerate()
        .map(|(k, &budget)| {
            let objectives: Vec<f64> = per_replicate.iter().map(|t| t[k]).collect();
            SweepRow {
                budget,
                mean_objective: mean(&objectives),
                std_objective: std_dev(&objectives),
                objectives,
            }
        })
        .collect())
}
