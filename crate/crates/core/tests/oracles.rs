//! Cross-checks against independent re-implementations written from the
//! definitions, not from the library code.

use approx::assert_relative_eq;
use pipette_core::bench::random_task;
use pipette_core::cost::{computed_execution_time, cycles_required};
use pipette_core::schedulers::row_major_order;
use pipette_core::solver::brute_force_optimal;
use pipette_core::{job_distance_matrix_for, jobs_of, Job, PlateFormat, TimingParams};

fn plate(n: u32) -> PlateFormat {
    PlateFormat::named(n).unwrap()
}

/// Tip adjacency from (row, column) coordinates.
fn coord_adjacent(p: PlateFormat, a: u32, b: u32) -> bool {
    let rows = p.rows();
    let (ra, ca) = ((a - 1) % rows, (a - 1) / rows);
    let (rb, cb) = ((b - 1) % rows, (b - 1) / rows);
    ca == cb && rb > ra && rb - ra == p.adjacency_stride()
}

fn transition(src: PlateFormat, dst: PlateFormat, t: &TimingParams, a: &Job, b: &Job) -> f64 {
    let s = if coord_adjacent(src, a.src, b.src) {
        ((b.volume - a.volume) / t.q_src).max(0.0)
    } else {
        t.t134_src + b.volume / t.q_src
    };
    let d = if coord_adjacent(dst, a.dst, b.dst) {
        ((b.volume - a.volume) / t.q_dst).max(0.0)
    } else {
        t.t134_dst + b.volume / t.q_dst
    };
    s + d
}

#[test]
fn computed_time_matches_term_by_term_sum() {
    let t = TimingParams::default();
    for seed in 0..20 {
        let task = random_task(plate(12), plate(12), 10, seed).unwrap();
        let jobs = jobs_of(&task);
        let d = job_distance_matrix_for(&jobs, &t);
        let order = row_major_order(&jobs);

        let mut expected = 0.0;
        for chunk in order.chunks(8) {
            for w in chunk.windows(2) {
                expected += transition(plate(12), plate(12), &t, jobs.job(w[0]), jobs.job(w[1]));
            }
        }
        let got = computed_execution_time(&order, &d, 8).unwrap();
        assert_relative_eq!(got, expected, epsilon = 1e-9);
    }
}

type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l] != 0.0 {
                for j in 0..m {
                    out[i][j] += a[i][l] * b[l][j];
                }
            }
        }
    }
    out
}

fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Job-level 0/1 matrix via incidence multiplication S * D * S^T.
fn incidence_product(p: PlateFormat, wells: &[u32]) -> Dense {
    let n = p.wells() as usize;
    let incidence: Dense = wells
        .iter()
        .map(|&w| (1..=n as u32).map(|k| f64::from(u8::from(k == w))).collect())
        .collect();
    let well_d: Dense = (1..=n as u32)
        .map(|a| (1..=n as u32).map(|b| if coord_adjacent(p, a, b) { 0.0 } else { 1.0 }).collect())
        .collect();
    matmul(&matmul(&incidence, &well_d), &transpose(&incidence))
}

#[test]
fn incidence_multiplication_matches_lookup() {
    let t = TimingParams {
        t134_src: 1.5,
        q_src: 80.0,
        t134_dst: 0.7,
        q_dst: 120.0,
    };
    for (s, dst, m, seed) in [(12, 12, 20, 1), (24, 96, 20, 2), (96, 384, 15, 3), (384, 1536, 12, 4), (12, 24, 1, 5)] {
        let (sp, dp) = (plate(s), plate(dst));
        let task = random_task(sp, dp, m, seed).unwrap();
        let jobs = jobs_of(&task);
        let d = job_distance_matrix_for(&jobs, &t);
        let src_bar = incidence_product(sp, &jobs.as_slice().iter().map(|j| j.src).collect::<Vec<_>>());
        let dst_bar = incidence_product(dp, &jobs.as_slice().iter().map(|j| j.dst).collect::<Vec<_>>());

        for i in 1..=m {
            assert_eq!(d.get(0, i), 0.0);
            assert_eq!(d.get(i, 0), 0.0);
            for j in 1..=m {
                if i == j {
                    continue;
                }
                let (vi, vj) = (jobs.job(i).volume, jobs.job(j).volume);
                let side = |bar: f64, t134: f64, q: f64| {
                    if bar == 1.0 {
                        t134 + vj / q
                    } else {
                        ((vj - vi) / q).max(0.0)
                    }
                };
                let expected = side(src_bar[i - 1][j - 1], t.t134_src, t.q_src)
                    + side(dst_bar[i - 1][j - 1], t.t134_dst, t.q_dst);
                assert_relative_eq!(d.get(i, j), expected, epsilon = 1e-12);
            }
        }
    }
}

/// Optimum by dynamic programming: cheapest open path over every subset,
/// then the cheapest partition of all jobs into K such subsets.
fn subset_dp_optimum(d: &pipette_core::JobDistanceMatrix, capacity: usize) -> f64 {
    let m = d.jobs();
    let full = (1usize << m) - 1;
    let mut path = vec![vec![f64::INFINITY; m]; 1 << m];
    for j in 0..m {
        path[1 << j][j] = 0.0;
    }
    for mask in 1..=full {
        for last in 0..m {
            let base = path[mask][last];
            if !base.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) == 0 {
                    let nm = mask | (1 << next);
                    let c = base + d.get(last + 1, next + 1);
                    if c < path[nm][next] {
                        path[nm][next] = c;
                    }
                }
            }
        }
    }
    let best_path: Vec<f64> = path
        .iter()
        .enumerate()
        .map(|(mask, row)| {
            if (mask as u32).count_ones() as usize > capacity {
                f64::INFINITY
            } else {
                row.iter().copied().fold(f64::INFINITY, f64::min)
            }
        })
        .collect();

    let k = cycles_required(m, capacity);
    let mut layer = vec![f64::INFINITY; 1 << m];
    layer[0] = 0.0;
    for _ in 0..k {
        let mut next = vec![f64::INFINITY; 1 << m];
        for done in 0..=full {
            if !layer[done].is_finite() {
                continue;
            }
            let rest = full & !done;
            if rest == 0 {
                continue;
            }
            let low = rest & rest.wrapping_neg();
            // subsets of `rest` containing its lowest job
            let mut sub = rest;
            while sub > 0 {
                if sub & low != 0 {
                    let c = layer[done] + best_path[sub];
                    if c < next[done | sub] {
                        next[done | sub] = c;
                    }
                }
                sub = (sub - 1) & rest;
            }
        }
        layer = next;
    }
    layer[full]
}

#[test]
fn brute_force_agrees_with_subset_dp() {
    let t = TimingParams::default();
    for seed in 0..24u64 {
        let (p, m) = if seed % 2 == 0 { (plate(12), 3 + seed as usize % 8) } else { (plate(24), 10) };
        let task = random_task(p, p, m, 1000 + seed).unwrap();
        let d = job_distance_matrix_for(&jobs_of(&task), &t);
        for capacity in [8, 3] {
            let brute = brute_force_optimal(&d, capacity).unwrap();
            assert_relative_eq!(brute.objective, subset_dp_optimum(&d, capacity), epsilon = 1e-9);
            assert_relative_eq!(brute.objective, d.cycles_cost(&brute.cycles), epsilon = 1e-12);
        }
    }
}

#[test]
fn row_letters_beyond_z() {
    // bijective base-26 written out by hand
    let p = plate(1536);
    let rows = ["A", "B", "Z", "AA", "AB", "AF"];
    let idx = [1u32, 2, 26, 27, 28, 32];
    for (r, label) in idx.iter().zip(rows) {
        assert_eq!(p.well_label(*r).unwrap(), format!("{label}1"));
        assert_eq!(p.well_label(32 * 47 + *r).unwrap(), format!("{label}48"));
    }
}
