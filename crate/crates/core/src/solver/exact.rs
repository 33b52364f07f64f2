//! Exhaustive optimum for small instances, used as a test oracle.

use super::Schedule;
use crate::cost::{cycles_required, JobDistanceMatrix};
use crate::error::ScheduleError;

/// Largest job count [`brute_force_optimal`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

struct Search<'a> {
    d: &'a JobDistanceMatrix,
    m: usize,
    cap: usize,
    k: usize,
    used: Vec<bool>,
    cycles: Vec<Vec<usize>>,
    best: f64,
    best_cycles: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Depth-first over job sequences with cycle breaks. Either the next
    /// job extends the open cycle or it opens a new one.
    fn dfs(&mut self, placed: usize, cost: f64) {
        if cost >= self.best {
            return;
        }
        if placed == self.m {
            if self.cycles.len() == self.k {
                self.best = cost;
                self.best_cycles.clone_from(&self.cycles);
            }
            return;
        }
        let remaining = self.m - placed;
        let open_len = self.cycles.last().map_or(self.cap, Vec::len);
        let cycles_left = self.k - self.cycles.len();
        // every remaining cycle needs at least one job and can hold `cap`
        if remaining < cycles_left || remaining > (self.cap - open_len) + cycles_left * self.cap {
            return;
        }
        for j in 1..=self.m {
            if self.used[j] {
                continue;
            }
            self.used[j] = true;
            if open_len < self.cap {
                let last = *self.cycles.last().and_then(|c| c.last()).expect("open cycle");
                self.cycles.last_mut().unwrap().push(j);
                self.dfs(placed + 1, cost + self.d.get(last, j));
                self.cycles.last_mut().unwrap().pop();
            }
            if cycles_left > 0 {
                self.cycles.push(vec![j]);
                self.dfs(placed + 1, cost);
                self.cycles.pop();
            }
            self.used[j] = false;
        }
    }
}

/// Globally optimal schedule by exhaustive enumeration of job orders and
/// cycle breaks, pruned by the incumbent. Refuses more than
/// [`BRUTE_FORCE_LIMIT`] jobs.
pub fn brute_force_optimal(d: &JobDistanceMatrix, capacity: usize) -> Result<Schedule, ScheduleError> {
    let m = d.jobs();
    if capacity == 0 {
        return Err(ScheduleError::ZeroCapacity);
    }
    if m > BRUTE_FORCE_LIMIT {
        return Err(ScheduleError::TooLarge {
            m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if m == 0 {
        return Ok(Schedule::empty());
    }
    let mut search = Search {
        d,
        m,
        cap: capacity,
        k: cycles_required(m, capacity),
        used: vec![false; m + 1],
        cycles: Vec::new(),
        best: f64::INFINITY,
        best_cycles: Vec::new(),
    };
    search.dfs(0, 0.0);
    Ok(Schedule::from_cycles(search.best_cycles, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_job() {
        let d = JobDistanceMatrix::from_fn(1, |_, _| 3.0);
        let s = brute_force_optimal(&d, 8).unwrap();
        assert_eq!(s.cycles, vec![vec![1]]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn exploits_asymmetry() {
        let d = JobDistanceMatrix::from_entries(3, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0]);
        let s = brute_force_optimal(&d, 8).unwrap();
        assert_eq!(s.cycles, vec![vec![2, 1]]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn refuses_large_instances() {
        let d = JobDistanceMatrix::from_fn(11, |_, _| 1.0);
        assert_eq!(
            brute_force_optimal(&d, 8).unwrap_err(),
            ScheduleError::TooLarge { m: 11, limit: 10 }
        );
    }

    #[test]
    fn uses_exactly_k_cycles() {
        // zero-cost depot would favour more cycles; K stays ceil(m/cap)
        let d = JobDistanceMatrix::from_fn(5, |_, _| 1.0);
        let s = brute_force_optimal(&d, 2).unwrap();
        assert_eq!(s.cycles.len(), 3);
        assert_eq!(s.objective, 2.0);
    }
}
