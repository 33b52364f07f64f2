use super::Schedule;
use crate::cost::JobDistanceMatrix;
use crate::schedulers::greedy_order;

/// Nearest-neighbour chain from the seeded start job, packed into
/// consecutive cycles of `capacity`. This is the greedy baseline's order, so
/// the solver can never end up worse than greedy for the same seed.
pub fn construct_initial(d: &JobDistanceMatrix, capacity: usize, seed: u64) -> Schedule {
    let order = greedy_order(d, seed);
    let mut s = Schedule::from_order(&order, capacity, d);
    s.stats.seed = seed;
    s.stats.construction_objective = s.objective;
    s
}
