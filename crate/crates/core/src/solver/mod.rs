//! Capacitated routing of jobs into tip cycles.
//!
//! Each cycle of the pipette head is a vehicle route that starts and ends at
//! the zero-cost depot and serves at most `capacity` jobs. The solver builds
//! a nearest-neighbour construction, then improves it with a granular local
//! search and seeded ruin-and-recreate kicks until the budget runs out.

mod construct;
mod exact;
mod search;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use construct::construct_initial;
pub use exact::{brute_force_optimal, BRUTE_FORCE_LIMIT};
pub use search::{local_search_step, StepOutcome};

use crate::cost::{cycles_required, JobDistanceMatrix};
use crate::error::ScheduleError;
use crate::par;
use crate::task::JobSet;
use crate::worklist::{Method, Provenance, WorkList};

/// Move evaluations per wall-clock second of a release build, measured on a
/// 96-well instance with 2000 transfers. Used to express "N seconds" as a
/// deterministic iteration budget.
pub const ITERATIONS_PER_SECOND: u64 = 40_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveBudget {
    /// Number of candidate-move evaluations. Deterministic.
    Iterations(u64),
    /// Wall-clock limit. Results depend on machine speed.
    WallClock(Duration),
}

impl SolveBudget {
    /// Iteration budget equivalent to `seconds` on the reference machine.
    pub fn seconds_equivalent(seconds: f64) -> Self {
        SolveBudget::Iterations((seconds * ITERATIONS_PER_SECOND as f64).round() as u64)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, SolveBudget::Iterations(_))
    }
}

impl fmt::Display for SolveBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveBudget::Iterations(n) => write!(f, "{n}i"),
            SolveBudget::WallClock(d) => write!(f, "{}s", d.as_secs_f64()),
        }
    }
}

impl FromStr for SolveBudget {
    type Err = String;

    /// `20s` is wall clock, `100000i` is an iteration count.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("bad budget `{s}` (expected e.g. `20s` or `100000i`)");
        if let Some(n) = s.strip_suffix('i') {
            let n: u64 = n.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok(SolveBudget::Iterations(n))
        } else if let Some(secs) = s.strip_suffix('s') {
            let secs: f64 = secs.parse().map_err(|_| bad())?;
            if !(secs > 0.0 && secs.is_finite()) {
                return Err(bad());
            }
            Ok(SolveBudget::WallClock(Duration::from_secs_f64(secs)))
        } else {
            Err(bad())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    /// Candidate moves evaluated.
    pub iterations: u64,
    /// Ruin-and-recreate rounds completed.
    pub kicks: u64,
    pub elapsed: Duration,
    pub seed: u64,
    pub construction_objective: f64,
}

/// A feasible assignment of jobs to ordered cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub cycles: Vec<Vec<usize>>,
    pub objective: f64,
    pub stats: SolverStats,
}

impl Schedule {
    pub fn from_cycles(cycles: Vec<Vec<usize>>, d: &JobDistanceMatrix) -> Self {
        let objective = d.cycles_cost(&cycles);
        Self {
            cycles,
            objective,
            stats: SolverStats::default(),
        }
    }

    /// Cuts a flat order into consecutive batches of `capacity`.
    pub fn from_order(order: &[usize], capacity: usize, d: &JobDistanceMatrix) -> Self {
        Self::from_cycles(order.chunks(capacity.max(1)).map(<[usize]>::to_vec).collect(), d)
    }

    pub fn empty() -> Self {
        Self {
            cycles: Vec::new(),
            objective: 0.0,
            stats: SolverStats::default(),
        }
    }

    pub fn flattened(&self) -> Vec<usize> {
        self.cycles.concat()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    WrongCycleCount { expected: usize, found: usize },
    EmptyCycle { cycle: usize },
    OverCapacity { cycle: usize, len: usize, capacity: usize },
    UnknownJob { cycle: usize, job: usize },
    Duplicate { job: usize },
    Missing { job: usize },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WrongCycleCount { expected, found } => {
                write!(f, "expected {expected} cycles, found {found}")
            }
            Self::EmptyCycle { cycle } => write!(f, "cycle {cycle} is empty"),
            Self::OverCapacity {
                cycle,
                len,
                capacity,
            } => write!(f, "cycle {cycle} holds {len} jobs, capacity is {capacity}"),
            Self::UnknownJob { cycle, job } => write!(f, "cycle {cycle} holds unknown job {job}"),
            Self::Duplicate { job } => write!(f, "job scheduled twice: {job}"),
            Self::Missing { job } => write!(f, "job not scheduled: {job}"),
        }
    }
}

/// Checks cycle count, capacity, coverage and uniqueness. Cycles are
/// reported 1-based. An empty report means the schedule is feasible.
pub fn validate_schedule(s: &Schedule, m: usize, capacity: usize) -> Vec<ScheduleViolation> {
    let mut report = Vec::new();
    let expected = if capacity == 0 {
        0
    } else {
        cycles_required(m, capacity)
    };
    if s.cycles.len() != expected {
        report.push(ScheduleViolation::WrongCycleCount {
            expected,
            found: s.cycles.len(),
        });
    }
    let mut seen = vec![false; m + 1];
    for (c, cycle) in s.cycles.iter().enumerate() {
        if cycle.is_empty() {
            report.push(ScheduleViolation::EmptyCycle { cycle: c + 1 });
        }
        if cycle.len() > capacity {
            report.push(ScheduleViolation::OverCapacity {
                cycle: c + 1,
                len: cycle.len(),
                capacity,
            });
        }
        for &job in cycle {
            if job == 0 || job > m {
                report.push(ScheduleViolation::UnknownJob { cycle: c + 1, job });
            } else if std::mem::replace(&mut seen[job], true) {
                report.push(ScheduleViolation::Duplicate { job });
            }
        }
    }
    report.extend(
        (1..=m)
            .filter(|&j| !seen[j])
            .map(|job| ScheduleViolation::Missing { job }),
    );
    report
}

/// Translates a schedule into a work list tagged `cvrp`.
pub fn schedule_to_worklist(s: &Schedule, jobs: &JobSet) -> Result<WorkList, ScheduleError> {
    let prov = Provenance {
        method: Method::Cvrp,
        seed: Some(s.stats.seed),
    };
    WorkList::from_job_cycles(jobs, &s.cycles, Some(prov))
}

/// Best schedule found within `budget`. Never worse than the
/// nearest-neighbour construction for the same seed.
pub fn solve(
    d: &JobDistanceMatrix,
    capacity: usize,
    budget: SolveBudget,
    seed: u64,
) -> Result<Schedule, ScheduleError> {
    solve_traced(d, capacity, budget, seed, &[]).map(|(s, _)| s)
}

/// Like [`solve`], also reporting the incumbent objective at each
/// iteration checkpoint (ascending). Under an iteration budget the value at
/// checkpoint `c` equals the objective `solve` returns with budget `c`.
pub fn solve_traced(
    d: &JobDistanceMatrix,
    capacity: usize,
    budget: SolveBudget,
    seed: u64,
    checkpoints: &[u64],
) -> Result<(Schedule, Vec<f64>), ScheduleError> {
    if capacity == 0 {
        return Err(ScheduleError::ZeroCapacity);
    }
    if d.jobs() == 0 {
        return Err(ScheduleError::Empty);
    }
    let started = Instant::now();
    let initial = construct_initial(d, capacity, seed);
    let mut engine = search::Engine::new(d, capacity, &initial.cycles, seed);
    let mut clock = search::Clock::new(budget, checkpoints);
    let cycles = engine.run(&mut clock);
    let mut schedule = Schedule::from_cycles(cycles, d);
    debug_assert!(schedule.objective <= initial.objective);
    schedule.stats = SolverStats {
        iterations: clock.evaluations(),
        kicks: engine.kicks(),
        elapsed: started.elapsed(),
        seed,
        construction_objective: initial.objective,
    };
    let trace = clock.into_trace();
    Ok((schedule, trace))
}

/// Independent solves over `seeds`, keeping the lowest objective (ties go
/// to the lowest seed). Runs in parallel when the `parallel` feature is on.
pub fn solve_portfolio(
    d: &JobDistanceMatrix,
    capacity: usize,
    budget: SolveBudget,
    seeds: &[u64],
) -> Result<Schedule, ScheduleError> {
    if seeds.is_empty() {
        return Err(ScheduleError::Empty);
    }
    let results = par::map(seeds.to_vec(), |seed| solve(d, capacity, budget, seed));
    let mut best: Option<Schedule> = None;
    for result in results {
        let s = result?;
        best = match best {
            Some(b)
                if b.objective < s.objective
                    || (b.objective == s.objective && b.stats.seed <= s.stats.seed) =>
            {
                Some(b)
            }
            _ => Some(s),
        };
    }
    Ok(best.expect("at least one seed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(m: usize) -> JobDistanceMatrix {
        JobDistanceMatrix::from_fn(m, |i, j| ((i * 7 + j * 13) % 11) as f64 * 0.5)
    }

    #[test]
    fn budget_parsing() {
        assert_eq!("20s".parse::<SolveBudget>().unwrap(), SolveBudget::WallClock(Duration::from_secs(20)));
        assert_eq!("1000i".parse::<SolveBudget>().unwrap(), SolveBudget::Iterations(1000));
        assert!("20".parse::<SolveBudget>().is_err());
        assert!("0i".parse::<SolveBudget>().is_err());
        assert!("-1s".parse::<SolveBudget>().is_err());
        assert_eq!(SolveBudget::Iterations(5).to_string(), "5i");
        assert_eq!(
            SolveBudget::seconds_equivalent(1.5),
            SolveBudget::Iterations(3 * ITERATIONS_PER_SECOND / 2)
        );
    }

    #[test]
    fn validation_examples() {
        let d = toy(16);
        let good = Schedule::from_order(&(1..=16).collect::<Vec<_>>(), 8, &d);
        assert!(validate_schedule(&good, 16, 8).is_empty());

        let mut missing = good.clone();
        missing.cycles[0].retain(|&j| j != 5);
        let report = validate_schedule(&missing, 16, 8);
        assert_eq!(report, vec![ScheduleViolation::Missing { job: 5 }]);
        assert_eq!(report[0].to_string(), "job not scheduled: 5");

        let d9 = toy(9);
        let over = Schedule::from_cycles(vec![(1..=9).collect(), vec![]], &d9);
        let report = validate_schedule(&over, 9, 8);
        assert!(report.contains(&ScheduleViolation::OverCapacity { cycle: 1, len: 9, capacity: 8 }));
        assert!(report.contains(&ScheduleViolation::EmptyCycle { cycle: 2 }));

        let dup = Schedule::from_cycles(vec![vec![1, 2, 2]], &toy(3));
        assert!(validate_schedule(&dup, 3, 8).contains(&ScheduleViolation::Duplicate { job: 2 }));
        let wrong = Schedule::from_cycles(vec![vec![1], vec![2]], &toy(2));
        assert!(!validate_schedule(&wrong, 2, 8).is_empty());
    }

    #[test]
    fn solve_single_cycle() {
        let d = toy(8);
        let s = solve(&d, 8, SolveBudget::Iterations(20_000), 1).unwrap();
        assert_eq!(s.cycles.len(), 1);
        assert!(validate_schedule(&s, 8, 8).is_empty());
        let greedy = crate::schedulers::greedy_order(&d, 1);
        assert!(s.objective <= d.cycle_cost(&greedy));
    }

    #[test]
    fn solve_rejects_degenerate_input() {
        assert_eq!(solve(&toy(0), 8, SolveBudget::Iterations(10), 0), Err(ScheduleError::Empty));
        assert_eq!(solve(&toy(3), 0, SolveBudget::Iterations(10), 0), Err(ScheduleError::ZeroCapacity));
    }

    #[test]
    fn tiny_budget_returns_construction_or_better() {
        let d = toy(30);
        let s = solve(&d, 8, SolveBudget::Iterations(1), 3).unwrap();
        assert!(validate_schedule(&s, 30, 8).is_empty());
        assert!(s.objective <= s.stats.construction_objective);
    }

    #[test]
    fn trace_matches_individual_solves() {
        let d = toy(40);
        let cps = [500, 2_000, 9_000];
        let (full, trace) = solve_traced(&d, 8, SolveBudget::Iterations(9_000), 5, &cps).unwrap();
        assert_eq!(trace.len(), 3);
        for (cp, value) in cps.iter().zip(&trace) {
            let s = solve(&d, 8, SolveBudget::Iterations(*cp), 5).unwrap();
            assert_eq!(s.objective, *value, "checkpoint {cp}");
        }
        assert_eq!(*trace.last().unwrap(), full.objective);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn portfolio_is_deterministic_and_best_of() {
        let d = toy(50);
        let budget = SolveBudget::Iterations(5_000);
        let seeds = [3, 1, 2];
        let a = solve_portfolio(&d, 8, budget, &seeds).unwrap();
        let b = solve_portfolio(&d, 8, budget, &seeds).unwrap();
        assert_eq!(a.cycles, b.cycles);
        for seed in seeds {
            let s = solve(&d, 8, budget, seed).unwrap();
            assert!(a.objective <= s.objective);
            if s.objective == a.objective {
                assert!(a.stats.seed <= seed);
            }
        }
    }
}
