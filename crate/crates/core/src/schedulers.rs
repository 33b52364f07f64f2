//! Baseline work-list orderings: row-major, long-axis prioritized (LAP) and
//! nearest-neighbour greedy.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::JobDistanceMatrix;
use crate::task::JobSet;
use crate::worklist::{Method, Provenance, WorkList};

/// Job indices in canonical order, `1..=m`.
pub fn row_major_order(jobs: &JobSet) -> Vec<usize> {
    (1..=jobs.len()).collect()
}

pub fn schedule_row_major(jobs: &JobSet, capacity: usize) -> WorkList {
    let prov = Provenance {
        method: Method::RowMajor,
        seed: None,
    };
    WorkList::from_order(jobs, &row_major_order(jobs), capacity, Some(prov))
        .expect("row-major order is a permutation")
}

/// Sweeps the wells of the larger plate (destination on ties) in ascending
/// order, taking at most one pending job per well per sweep. Jobs queued at
/// the same well are consumed in ascending order of their other-plate well.
pub fn lap_order(jobs: &JobSet) -> Vec<usize> {
    let use_dst = jobs.dst_plate().wells() >= jobs.src_plate().wells();
    let wells = if use_dst {
        jobs.dst_plate().wells()
    } else {
        jobs.src_plate().wells()
    } as usize;

    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); wells + 1];
    let mut keyed: Vec<(u32, u32, usize)> = jobs
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, j)| {
            if use_dst {
                (j.dst, j.src, i + 1)
            } else {
                (j.src, j.dst, i + 1)
            }
        })
        .collect();
    keyed.sort_unstable();
    for (well, _, id) in keyed {
        queues[well as usize].push_back(id);
    }

    let mut order = Vec::with_capacity(jobs.len());
    while order.len() < jobs.len() {
        for q in queues.iter_mut() {
            if let Some(id) = q.pop_front() {
                order.push(id);
            }
        }
    }
    order
}

pub fn schedule_lap(jobs: &JobSet, capacity: usize) -> WorkList {
    let prov = Provenance {
        method: Method::Lap,
        seed: None,
    };
    WorkList::from_order(jobs, &lap_order(jobs), capacity, Some(prov))
        .expect("LAP order is a permutation")
}

/// Seeded uniform choice of a starting job in `1..=m`.
pub fn seeded_start(seed: u64, m: usize) -> usize {
    assert!(m >= 1);
    ChaCha8Rng::seed_from_u64(seed).gen_range(1..=m)
}

/// Nearest-neighbour chain from `start` over all jobs, ignoring cycle
/// boundaries. Ties go to the lowest job index.
pub fn nearest_neighbor_order(d: &JobDistanceMatrix, start: usize) -> Vec<usize> {
    let m = d.jobs();
    let mut order = Vec::with_capacity(m);
    let mut done = vec![false; m + 1];
    done[0] = true;
    let mut current = start;
    done[start] = true;
    order.push(start);
    for _ in 1..m {
        let row = d.row(current);
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (j, &c) in row.iter().enumerate() {
            if !done[j] && c < best_cost {
                best = j;
                best_cost = c;
            }
        }
        done[best] = true;
        order.push(best);
        current = best;
    }
    order
}

pub fn greedy_order(d: &JobDistanceMatrix, seed: u64) -> Vec<usize> {
    if d.jobs() == 0 {
        return Vec::new();
    }
    nearest_neighbor_order(d, seeded_start(seed, d.jobs()))
}

pub fn schedule_greedy(jobs: &JobSet, d: &JobDistanceMatrix, seed: u64, capacity: usize) -> WorkList {
    let prov = Provenance {
        method: Method::Greedy,
        seed: Some(seed),
    };
    WorkList::from_order(jobs, &greedy_order(d, seed), capacity, Some(prov))
        .expect("greedy order is a permutation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{computed_execution_time, job_distance_matrix_for, TimingParams};
    use crate::plate::PlateFormat;
    use crate::task::{jobs_of, Job, TaskMatrix};

    fn plate(n: u32) -> PlateFormat {
        PlateFormat::named(n).unwrap()
    }

    #[test]
    fn row_major_examples() {
        let mut task = TaskMatrix::new(plate(12), plate(12));
        task.insert(1, 5, 50.0);
        task.insert(1, 2, 30.0);
        task.insert(3, 1, 20.0);
        let wl = schedule_row_major(&jobs_of(&task), 8);
        let pairs: Vec<_> = wl.transfers().map(|j| (j.src, j.dst)).collect();
        assert_eq!(pairs, vec![(1, 2), (1, 5), (3, 1)]);

        let empty = jobs_of(&TaskMatrix::new(plate(12), plate(12)));
        assert!(schedule_row_major(&empty, 8).is_empty());
        assert!(schedule_lap(&empty, 8).is_empty());
    }

    #[test]
    fn lap_single_sweep_sorted_by_destination() {
        let mut task = TaskMatrix::new(plate(24), plate(96));
        for dst in 1..=96u32 {
            task.insert((dst * 7) % 24 + 1, dst, 10.0);
        }
        let jobs = jobs_of(&task);
        let wl = schedule_lap(&jobs, 8);
        let dsts: Vec<u32> = wl.transfers().map(|j| j.dst).collect();
        assert_eq!(dsts, (1..=96).collect::<Vec<_>>());
        let dst_plate = plate(96);
        for w in dsts.windows(2) {
            if dst_plate.adjacent(w[0], w[1]) {
                assert_eq!(dst_plate.well_distance(w[0], w[1]), 0);
            }
        }
    }

    #[test]
    fn lap_round_robin_per_well() {
        let mut task = TaskMatrix::new(plate(96), plate(96));
        task.insert(10, 1, 5.0);
        task.insert(3, 1, 5.0);
        task.insert(4, 2, 5.0);
        let jobs = jobs_of(&task);
        let order: Vec<_> = schedule_lap(&jobs, 8)
            .transfers()
            .map(|j| (j.src, j.dst))
            .collect();
        assert_eq!(order, vec![(3, 1), (4, 2), (10, 1)]);
    }

    #[test]
    fn lap_uses_source_axis_when_larger() {
        let mut task = TaskMatrix::new(plate(96), plate(12));
        task.insert(2, 1, 5.0);
        task.insert(1, 3, 5.0);
        let order: Vec<_> = schedule_lap(&jobs_of(&task), 8)
            .transfers()
            .map(|j| j.src)
            .collect();
        assert_eq!(order, vec![1, 2]);
    }

    #[test]
    fn greedy_examples() {
        let single = JobDistanceMatrix::from_fn(1, |_, _| 1.0);
        for seed in 0..5 {
            assert_eq!(greedy_order(&single, seed), vec![1]);
        }
        let d = JobDistanceMatrix::from_entries(3, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.2, 0.0]);
        let seed = (0..).find(|&s| seeded_start(s, 2) == 1).unwrap();
        assert_eq!(greedy_order(&d, seed), vec![1, 2]);
    }

    #[test]
    fn greedy_ties_pick_lowest_index() {
        let d = JobDistanceMatrix::from_fn(4, |_, _| 1.0);
        assert_eq!(nearest_neighbor_order(&d, 3), vec![3, 1, 2, 4]);
    }

    #[test]
    fn greedy_is_deterministic() {
        let p = plate(96);
        let jobs: Vec<Job> = (0..200u32)
            .map(|k| Job {
                src: k % 96 + 1,
                dst: (k * 37) % 96 + 1,
                volume: f64::from(k % 100 + 1),
            })
            .collect();
        let mut task = TaskMatrix::new(p, p);
        for j in &jobs {
            task.insert(j.src, j.dst, j.volume);
        }
        let jobs = jobs_of(&task);
        let d = job_distance_matrix_for(&jobs, &TimingParams::default());
        let a = schedule_greedy(&jobs, &d, 42, 8);
        let b = schedule_greedy(&jobs, &d, 42, 8);
        assert_eq!(a, b);
        let order: Vec<usize> = a.job_cycles(&jobs).unwrap().concat();
        let t = computed_execution_time(&order, &d, 8).unwrap();
        assert_eq!(t, a.computed_time(&jobs, &d).unwrap());
    }
}
