use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pipette_core::bench::random_task;
use pipette_core::cost::computed_execution_time;
use pipette_core::schedulers::{greedy_order, lap_order, row_major_order};
use pipette_core::solver::{
    construct_initial, local_search_step, validate_schedule, Schedule, StepOutcome,
};
use pipette_core::{
    job_distance_matrix_for, jobs_of, parse_task_csv, parse_worklist_csv, solve, Job, JobSet,
    PlateFormat, SolveBudget, TimingParams, WellDistanceMatrix, WorkList,
};

const NAMED: [u32; 5] = [12, 24, 96, 384, 1536];

fn plate_pair() -> impl Strategy<Value = (PlateFormat, PlateFormat)> {
    (0..4usize, 0..4usize).prop_map(|(a, b)| {
        (PlateFormat::named(NAMED[a]).unwrap(), PlateFormat::named(NAMED[b]).unwrap())
    })
}

fn instance() -> impl Strategy<Value = (PlateFormat, PlateFormat, usize, u64)> {
    (plate_pair(), 1..120usize, any::<u64>()).prop_map(|((s, d), m, seed)| {
        let m = m.min(s.wells() as usize * d.wells() as usize);
        (s, d, m, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_method_is_feasible((s, d, m, seed) in instance(), capacity in 1..10usize) {
        let jobs = jobs_of(&random_task(s, d, m, seed).unwrap());
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        for order in [row_major_order(&jobs), lap_order(&jobs), greedy_order(&dm, seed)] {
            let sched = Schedule::from_order(&order, capacity, &dm);
            prop_assert!(validate_schedule(&sched, m, capacity).is_empty());
        }
        let solved = solve(&dm, capacity, SolveBudget::Iterations(5_000), seed).unwrap();
        prop_assert!(validate_schedule(&solved, m, capacity).is_empty());
        prop_assert!((solved.objective - dm.cycles_cost(&solved.cycles)).abs() < 1e-9);
    }

    #[test]
    fn solver_never_worse_than_greedy((s, d, m, seed) in instance()) {
        let jobs = jobs_of(&random_task(s, d, m, seed).unwrap());
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        let greedy = computed_execution_time(&greedy_order(&dm, seed), &dm, 8).unwrap();
        let solved = solve(&dm, 8, SolveBudget::Iterations(20_000), seed).unwrap();
        prop_assert!(solved.objective <= greedy + 1e-9);
        prop_assert_eq!(construct_initial(&dm, 8, seed).objective, greedy);
    }

    #[test]
    fn cycle_order_does_not_change_cost((s, d, m, seed) in instance(), rot in 0..16usize) {
        let jobs = jobs_of(&random_task(s, d, m, seed).unwrap());
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        let mut cycles = Schedule::from_order(&row_major_order(&jobs), 8, &dm).cycles;
        let before = dm.cycles_cost(&cycles);
        prop_assert!(before >= 0.0);
        let k = cycles.len();
        cycles.rotate_left(rot % k);
        cycles.reverse();
        prop_assert!((dm.cycles_cost(&cycles) - before).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trips((s, d, m, seed) in instance()) {
        let task = random_task(s, d, m, seed).unwrap();
        let parsed = parse_task_csv(task.to_csv().as_bytes(), None, None).unwrap();
        prop_assert_eq!(&parsed, &task);

        let jobs = jobs_of(&task);
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        let wl = WorkList::from_order(&jobs, &greedy_order(&dm, seed), 8, None).unwrap();
        let back = parse_worklist_csv(wl.to_csv().as_bytes(), None, None).unwrap();
        prop_assert_eq!(back.cycles(), wl.cycles());
        prop_assert_eq!(back.to_csv(), wl.to_csv());
    }

    #[test]
    fn local_steps_improve_and_stay_feasible((s, d, m, seed) in instance(), capacity in 2..9usize) {
        let jobs = jobs_of(&random_task(s, d, m, seed).unwrap());
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        let mut current = Schedule::from_order(&row_major_order(&jobs), capacity, &dm);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            match local_search_step(&current, &dm, capacity, &mut rng) {
                StepOutcome::Improved(next) => {
                    prop_assert!(next.objective < current.objective);
                    prop_assert!(validate_schedule(&next, m, capacity).is_empty());
                    prop_assert!((next.objective - dm.cycles_cost(&next.cycles)).abs() < 1e-9);
                    current = next;
                }
                StepOutcome::NoImprovement => break,
            }
        }
    }

    #[test]
    fn iteration_budgets_are_deterministic((s, d, m, seed) in instance()) {
        let jobs = jobs_of(&random_task(s, d, m, seed).unwrap());
        let dm = job_distance_matrix_for(&jobs, &TimingParams::default());
        let a = solve(&dm, 8, SolveBudget::Iterations(10_000), seed).unwrap();
        let b = solve(&dm, 8, SolveBudget::Iterations(10_000), seed).unwrap();
        prop_assert_eq!(a.cycles, b.cycles);
    }

    #[test]
    fn well_zero_counts(idx in 0..5usize) {
        let p = PlateFormat::named(NAMED[idx]).unwrap();
        let wd = WellDistanceMatrix::new(p);
        let mut zeros = 0usize;
        for a in 1..=p.wells() {
            for b in 1..=p.wells() {
                if wd.get(a, b) == 0 {
                    zeros += 1;
                    prop_assert_eq!(wd.get(b, a), 1);
                }
            }
        }
        let per_column = p.rows().saturating_sub(p.adjacency_stride()) as usize;
        prop_assert_eq!(zeros, per_column * p.cols() as usize);
    }

    #[test]
    fn labels_round_trip(idx in 0..5usize, pick in any::<u32>()) {
        let p = PlateFormat::named(NAMED[idx]).unwrap();
        let well = pick % p.wells() + 1;
        let (r, c) = p.coords(well).unwrap();
        prop_assert_eq!(p.well_index(r, c).unwrap(), well);
        let label = p.well_label(well).unwrap();
        prop_assert!(label.ends_with(&c.to_string()));
    }

    #[test]
    fn larger_volumes_cost_more_without_adjacency(
        m in 2..30usize,
        seed in any::<u64>(),
        bump in 0.1..50.0f64,
        which in any::<usize>(),
    ) {
        // one column per job, so no transition is tip-adjacent
        let p = PlateFormat::named(96).unwrap();
        let base = random_task(p, p, m, seed).unwrap();
        let mut jobs: Vec<Job> = jobs_of(&base)
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, j)| Job { src: 8 * (k as u32 % 12) + 1, dst: 8 * (k as u32 / 12) + 1, volume: j.volume })
            .collect();
        let order: Vec<usize> = (1..=m).collect();
        let cost = |jobs: &[Job]| {
            let set = JobSet::from_jobs(p, p, jobs.to_vec());
            computed_execution_time(&order, &job_distance_matrix_for(&set, &TimingParams::default()), 8).unwrap()
        };
        let before = cost(&jobs);
        jobs[which % m].volume += bump;
        prop_assert!(cost(&jobs) >= before - 1e-12);
    }
}

#[test]
fn larger_source_volume_can_lower_cost_under_adjacency() {
    // 1 -> 2 adjacent on both plates: cost 2 * (60 - 40) / 100
    let p = PlateFormat::named(96).unwrap();
    let cost = |v1: f64| {
        let set = JobSet::from_jobs(
            p,
            p,
            vec![Job { src: 1, dst: 1, volume: v1 }, Job { src: 2, dst: 2, volume: 60.0 }],
        );
        computed_execution_time(&[1, 2], &job_distance_matrix_for(&set, &TimingParams::default()), 8)
            .unwrap()
    };
    assert!((cost(40.0) - 0.4).abs() < 1e-12);
    assert_eq!(cost(60.0), 0.0);
}
