//! Scheduling liquid transfers for an 8-channel pipetting arm.
//!
//! A task lists (source well, destination well, volume) transfers between
//! two microplates. Jobs are grouped into cycles of at most eight, one per
//! tip, and ordered so that consecutive jobs land in tip-adjacent wells as
//! often as possible. The problem is solved as an asymmetric capacitated
//! vehicle routing problem by [`solver::solve`]; [`schedulers`] holds the
//! baseline orderings and [`simulator`] estimates wall-clock execution.

pub mod bench;
pub mod cost;
pub mod error;
pub mod par;
pub mod plate;
pub mod schedulers;
pub mod simulator;
pub mod solver;
pub mod task;
pub mod worklist;

pub use cost::{
    computed_execution_time, cycles_required, job_distance_matrix, job_distance_matrix_for,
    JobDistanceMatrix, TimingParams, DEFAULT_CAPACITY,
};
pub use error::{BenchError, ParseError, PlateError, ScheduleError};
pub use plate::{PlateFormat, Well, WellDistanceMatrix};
pub use simulator::{simulate, SimParams, SimReport};
pub use solver::{solve, solve_portfolio, Schedule, SolveBudget};
pub use task::{jobs_of, parse_task_csv, Job, JobSet, TaskMatrix};
pub use worklist::{parse_worklist_csv, Method, WorkList};
