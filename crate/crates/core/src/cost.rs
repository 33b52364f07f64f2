//! Job-level transition costs and the computed execution time of a work
//! list.
//!
//! A transition from job `i` to job `j` costs, on each plate, either a full
//! unit action (`t134 + v_j / q`) when the two wells cannot be served by
//! neighbouring tips, or only the extra aspiration/dispense time
//! `max(0, (v_j - v_i) / q)` when they can. Index 0 is the depot: every
//! cycle starts and ends there at zero cost.

use crate::error::ScheduleError;
use crate::plate::WellDistanceMatrix;
use crate::task::JobSet;

pub const DEFAULT_CAPACITY: usize = 8;

/// Proxy-cost constants for aspiration (source) and dispensing (destination).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    /// Lower + withdraw + arm move time at the source plate, seconds.
    pub t134_src: f64,
    /// Aspiration speed, µL/s.
    pub q_src: f64,
    pub t134_dst: f64,
    /// Dispense speed, µL/s.
    pub q_dst: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            t134_src: 1.0,
            q_src: 100.0,
            t134_dst: 1.0,
            q_dst: 100.0,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("t134_src", self.t134_src),
            ("q_src", self.q_src),
            ("t134_dst", self.t134_dst),
            ("q_dst", self.q_dst),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("{name} must be a positive number, got {value}"));
            }
        }
        Ok(())
    }
}

/// Cost of one side of a transition given whether the wells are tip-adjacent.
#[inline]
pub fn side_cost(adjacent: bool, v_from: f64, v_to: f64, t134: f64, q: f64) -> f64 {
    if adjacent {
        ((v_to - v_from) / q).max(0.0)
    } else {
        t134 + v_to / q
    }
}

/// Dense `(m+1) x (m+1)` asymmetric transition cost matrix; index 0 is the
/// depot.
#[derive(Debug, Clone, PartialEq)]
pub struct JobDistanceMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl JobDistanceMatrix {
    /// Wraps raw entries. Row and column 0 are forced to zero.
    pub fn from_entries(size: usize, mut entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), size * size, "entries must be size*size");
        assert!(size >= 1, "matrix must contain the depot");
        for k in 0..size {
            entries[k] = 0.0;
            entries[k * size] = 0.0;
        }
        Self { size, entries }
    }

    /// Builds a matrix for `m` jobs from a cost function over 1-based jobs.
    pub fn from_fn(m: usize, mut cost: impl FnMut(usize, usize) -> f64) -> Self {
        let size = m + 1;
        let mut entries = vec![0.0; size * size];
        for i in 1..size {
            for j in 1..size {
                if i != j {
                    entries[i * size + j] = cost(i, j);
                }
            }
        }
        Self { size, entries }
    }

    /// Number of jobs `m` (excluding the depot).
    pub fn jobs(&self) -> usize {
        self.size - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Cost of one cycle: depot -> jobs in order -> depot.
    pub fn cycle_cost(&self, cycle: &[usize]) -> f64 {
        match (cycle.first(), cycle.last()) {
            (Some(&first), Some(&last)) => {
                self.get(0, first)
                    + cycle.windows(2).map(|w| self.get(w[0], w[1])).sum::<f64>()
                    + self.get(last, 0)
            }
            _ => 0.0,
        }
    }

    /// Sum of cycle costs.
    pub fn cycles_cost<C: AsRef<[usize]>>(&self, cycles: &[C]) -> f64 {
        cycles.iter().map(|c| self.cycle_cost(c.as_ref())).sum()
    }
}

/// Builds the job transition cost matrix of `jobs`.
pub fn job_distance_matrix(
    jobs: &JobSet,
    src_d: &WellDistanceMatrix,
    dst_d: &WellDistanceMatrix,
    timing: &TimingParams,
) -> JobDistanceMatrix {
    let js = jobs.as_slice();
    JobDistanceMatrix::from_fn(jobs.len(), |i, j| {
        let (a, b) = (&js[i - 1], &js[j - 1]);
        side_cost(
            src_d.get(a.src, b.src) == 0,
            a.volume,
            b.volume,
            timing.t134_src,
            timing.q_src,
        ) + side_cost(
            dst_d.get(a.dst, b.dst) == 0,
            a.volume,
            b.volume,
            timing.t134_dst,
            timing.q_dst,
        )
    })
}

/// Convenience wrapper building both plate matrices from the job set.
pub fn job_distance_matrix_for(jobs: &JobSet, timing: &TimingParams) -> JobDistanceMatrix {
    let src_d = WellDistanceMatrix::new(jobs.src_plate());
    let dst_d = WellDistanceMatrix::new(jobs.dst_plate());
    job_distance_matrix(jobs, &src_d, &dst_d, timing)
}

/// Number of cycles `K = ceil(m / capacity)`.
pub fn cycles_required(m: usize, capacity: usize) -> usize {
    assert!(capacity >= 1, "capacity must be at least 1");
    m.div_ceil(capacity)
}

/// Checks that `order` is a permutation of `1..=m`.
pub fn check_permutation(order: &[usize], m: usize) -> Result<(), ScheduleError> {
    if order.len() != m {
        return Err(ScheduleError::NotPermutation {
            m,
            reason: format!("length {} != {m}", order.len()),
        });
    }
    let mut seen = vec![false; m + 1];
    for &j in order {
        if j == 0 || j > m {
            return Err(ScheduleError::NotPermutation {
                m,
                reason: format!("index {j} out of range"),
            });
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(ScheduleError::NotPermutation {
                m,
                reason: format!("index {j} repeated"),
            });
        }
    }
    Ok(())
}

/// Computed execution time of a flat job order executed in consecutive
/// batches of `capacity` jobs.
pub fn computed_execution_time(
    order: &[usize],
    d: &JobDistanceMatrix,
    capacity: usize,
) -> Result<f64, ScheduleError> {
    if capacity == 0 {
        return Err(ScheduleError::ZeroCapacity);
    }
    check_permutation(order, d.jobs())?;
    Ok(order.chunks(capacity).map(|c| d.cycle_cost(c)).sum())
}
