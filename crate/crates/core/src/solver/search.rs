//! Granular local search with ruin-and-recreate kicks.
//!
//! Moves never reverse a chain: transition costs are directional, so every
//! operator keeps the relative order of the jobs it moves. Routes are open
//! paths because depot transitions cost nothing; route index 0 in the
//! distance matrix doubles as "no neighbour".

use std::collections::VecDeque;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Schedule, SolveBudget};
use crate::cost::JobDistanceMatrix;

const EPS: f64 = 1e-9;
/// Candidate successors/predecessors kept per job.
const GRANULARITY: usize = 24;
/// Longest segment moved by or-opt.
const MAX_SEGMENT: usize = 3;

/// Evaluation counter, budget and checkpoint recorder.
pub(crate) struct Clock {
    budget: SolveBudget,
    start: Instant,
    evals: u64,
    checkpoints: Vec<u64>,
    trace: Vec<f64>,
}

impl Clock {
    pub(crate) fn new(budget: SolveBudget, checkpoints: &[u64]) -> Self {
        Self {
            budget,
            start: Instant::now(),
            evals: 0,
            checkpoints: checkpoints.to_vec(),
            trace: Vec::with_capacity(checkpoints.len()),
        }
    }

    fn unbounded() -> Self {
        Self::new(SolveBudget::Iterations(u64::MAX), &[])
    }

    pub(crate) fn evaluations(&self) -> u64 {
        self.evals
    }

    #[inline]
    fn count(&mut self) {
        self.evals += 1;
    }

    fn checkpoint_due(&self) -> bool {
        self.checkpoints
            .get(self.trace.len())
            .is_some_and(|&cp| self.evals >= cp)
    }

    fn exhausted(&self) -> bool {
        match self.budget {
            SolveBudget::Iterations(n) => self.evals >= n,
            SolveBudget::WallClock(limit) => self.start.elapsed() >= limit,
        }
    }

    /// Checkpoints never reached take the final objective.
    fn finish(&mut self, objective: f64) {
        while self.trace.len() < self.checkpoints.len() {
            self.trace.push(objective);
        }
    }

    pub(crate) fn into_trace(self) -> Vec<f64> {
        self.trace
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    /// Move `len` jobs starting at `start` of route `from` so they begin at
    /// index `at` of route `to` (indices before removal).
    Relocate {
        from: usize,
        start: usize,
        len: usize,
        to: usize,
        at: usize,
    },
    /// Exchange the positions of two jobs.
    Swap { u: usize, v: usize },
    /// Exchange the tails of two routes: `r1[..cut1] + r2[cut2..]` and
    /// `r2[..cut2] + r1[cut1..]`.
    Tails {
        r1: usize,
        cut1: usize,
        r2: usize,
        cut2: usize,
    },
}

pub(crate) struct Engine<'a> {
    d: &'a JobDistanceMatrix,
    cap: usize,
    m: usize,
    routes: Vec<Vec<usize>>,
    route_of: Vec<usize>,
    pos_of: Vec<usize>,
    route_cost: Vec<f64>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    rng: ChaCha8Rng,
    undo: Vec<(usize, Vec<usize>)>,
    undo_stamp: Vec<u64>,
    epoch: u64,
    best_routes: Vec<Vec<usize>>,
    best_cost: f64,
    kicks: u64,
    scratch: Vec<usize>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(d: &'a JobDistanceMatrix, cap: usize, cycles: &[Vec<usize>], seed: u64) -> Self {
        let m = d.jobs();
        let (succ, pred) = candidate_lists(d, GRANULARITY);
        let mut engine = Self {
            d,
            cap,
            m,
            routes: cycles.to_vec(),
            route_of: vec![0; m + 1],
            pos_of: vec![0; m + 1],
            route_cost: vec![0.0; cycles.len()],
            succ,
            pred,
            queue: VecDeque::new(),
            queued: vec![false; m + 1],
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe_f00d_d00d),
            undo: Vec::new(),
            undo_stamp: vec![0; cycles.len()],
            epoch: 0,
            best_routes: cycles.to_vec(),
            best_cost: 0.0,
            kicks: 0,
            scratch: Vec::with_capacity(cap + MAX_SEGMENT),
        };
        for r in 0..engine.routes.len() {
            engine.reindex(r);
        }
        engine.best_cost = engine.total();
        engine
    }

    pub(crate) fn kicks(&self) -> u64 {
        self.kicks
    }

    fn total(&self) -> f64 {
        self.route_cost.iter().sum()
    }

    fn incumbent(&self) -> f64 {
        self.best_cost.min(self.total())
    }

    #[inline]
    fn c(&self, a: usize, b: usize) -> f64 {
        self.d.get(a, b)
    }

    #[inline]
    fn prev(&self, u: usize) -> usize {
        let i = self.pos_of[u];
        if i == 0 {
            0
        } else {
            self.routes[self.route_of[u]][i - 1]
        }
    }

    #[inline]
    fn next(&self, u: usize) -> usize {
        let route = &self.routes[self.route_of[u]];
        route.get(self.pos_of[u] + 1).copied().unwrap_or(0)
    }

    #[inline]
    fn at(&self, r: usize, i: usize) -> usize {
        self.routes[r].get(i).copied().unwrap_or(0)
    }

    fn reindex(&mut self, r: usize) {
        for (i, &u) in self.routes[r].iter().enumerate() {
            self.route_of[u] = r;
            self.pos_of[u] = i;
        }
        self.route_cost[r] = self.d.cycle_cost(&self.routes[r]);
    }

    fn enqueue(&mut self, u: usize) {
        if !self.queued[u] {
            self.queued[u] = true;
            self.queue.push_back(u);
        }
    }

    fn enqueue_route(&mut self, r: usize) {
        for i in 0..self.routes[r].len() {
            let u = self.routes[r][i];
            self.enqueue(u);
        }
    }

    fn enqueue_all_shuffled(&mut self) {
        let mut all: Vec<usize> = (1..=self.m).collect();
        all.shuffle(&mut self.rng);
        for u in all {
            self.enqueue(u);
        }
    }

    /// Saves the route's content the first time it changes in this epoch.
    fn touch(&mut self, r: usize) {
        if self.epoch > 0 && self.undo_stamp[r] != self.epoch {
            self.undo_stamp[r] = self.epoch;
            self.undo.push((r, self.routes[r].clone()));
        }
    }

    fn begin_epoch(&mut self) {
        self.epoch += 1;
        self.undo.clear();
    }

    fn revert(&mut self) {
        let undo = std::mem::take(&mut self.undo);
        for (r, content) in undo {
            self.routes[r] = content;
            self.reindex(r);
        }
        for u in self.queue.drain(..) {
            self.queued[u] = false;
        }
    }

    fn save_best(&mut self) {
        self.best_cost = self.total();
        self.best_routes.clone_from(&self.routes);
    }

    fn restore_best(&mut self) {
        self.routes.clone_from(&self.best_routes);
        for r in 0..self.routes.len() {
            self.reindex(r);
        }
    }

    /// Records due checkpoints and reports whether the budget is spent.
    fn tick(&self, clock: &mut Clock) -> bool {
        while clock.checkpoint_due() {
            let v = self.incumbent();
            clock.trace.push(v);
        }
        clock.exhausted()
    }

    fn in_segment(&self, v: usize, r: usize, start: usize, len: usize) -> bool {
        self.route_of[v] == r && (start..start + len).contains(&self.pos_of[v])
    }

    fn cost_relocate(&mut self, from: usize, start: usize, len: usize, to: usize, at: usize) -> Option<f64> {
        let seg_first = self.routes[from][start];
        let seg_last = self.routes[from][start + len - 1];
        if from == to {
            if (start..=start + len).contains(&at) {
                return None;
            }
            let mut s = std::mem::take(&mut self.scratch);
            s.clear();
            let route = &self.routes[from];
            s.extend_from_slice(&route[..start]);
            s.extend_from_slice(&route[start + len..]);
            let ins = if at > start { at - len } else { at };
            for (k, &x) in route[start..start + len].iter().enumerate() {
                s.insert(ins + k, x);
            }
            let delta = self.d.cycle_cost(&s) - self.route_cost[from];
            self.scratch = s;
            return Some(delta);
        }
        if self.routes[to].len() + len > self.cap || self.routes[from].len() <= len {
            return None;
        }
        let pa = if start == 0 { 0 } else { self.routes[from][start - 1] };
        let nb = self.at(from, start + len);
        let x = if at == 0 { 0 } else { self.routes[to][at - 1] };
        let y = self.at(to, at);
        Some(
            self.c(pa, nb) - self.c(pa, seg_first) - self.c(seg_last, nb) + self.c(x, seg_first)
                + self.c(seg_last, y)
                - self.c(x, y),
        )
    }

    fn cost_swap(&mut self, u: usize, v: usize) -> f64 {
        let (ru, rv) = (self.route_of[u], self.route_of[v]);
        if ru == rv {
            let mut s = std::mem::take(&mut self.scratch);
            s.clear();
            s.extend_from_slice(&self.routes[ru]);
            s.swap(self.pos_of[u], self.pos_of[v]);
            let delta = self.d.cycle_cost(&s) - self.route_cost[ru];
            self.scratch = s;
            return delta;
        }
        let (pu, nu, pv, nv) = (self.prev(u), self.next(u), self.prev(v), self.next(v));
        self.c(pu, v) + self.c(v, nu) - self.c(pu, u) - self.c(u, nu) + self.c(pv, u) + self.c(u, nv)
            - self.c(pv, v)
            - self.c(v, nv)
    }

    fn cost_tails(&self, r1: usize, cut1: usize, r2: usize, cut2: usize) -> Option<f64> {
        let (l1, l2) = (self.routes[r1].len(), self.routes[r2].len());
        let n1 = cut1 + (l2 - cut2);
        let n2 = cut2 + (l1 - cut1);
        if r1 == r2 || n1 == 0 || n2 == 0 || n1 > self.cap || n2 > self.cap {
            return None;
        }
        let a = if cut1 == 0 { 0 } else { self.routes[r1][cut1 - 1] };
        let a_next = self.at(r1, cut1);
        let b = if cut2 == 0 { 0 } else { self.routes[r2][cut2 - 1] };
        let b_next = self.at(r2, cut2);
        Some(self.c(a, b_next) + self.c(b, a_next) - self.c(a, a_next) - self.c(b, b_next))
    }

    /// Best improving move touching job `u`, if any.
    fn best_move(&mut self, u: usize, clock: &mut Clock) -> Option<(f64, Move)> {
        let mut best: Option<(f64, Move)> = None;
        let consider = |delta: f64, mv: Move, best: &mut Option<(f64, Move)>| {
            if delta < -EPS && best.is_none_or(|(b, _)| delta < b) {
                *best = Some((delta, mv));
            }
        };
        let r = self.route_of[u];
        let i = self.pos_of[u];

        for len in 1..=MAX_SEGMENT {
            if i + len > self.routes[r].len() {
                break;
            }
            let last = self.routes[r][i + len - 1];
            for k in 0..self.pred[u].len() {
                let p = self.pred[u][k];
                if self.in_segment(p, r, i, len) {
                    continue;
                }
                let (to, at) = (self.route_of[p], self.pos_of[p] + 1);
                clock.count();
                if let Some(delta) = self.cost_relocate(r, i, len, to, at) {
                    consider(delta, Move::Relocate { from: r, start: i, len, to, at }, &mut best);
                }
            }
            for k in 0..self.succ[last].len() {
                let s = self.succ[last][k];
                if self.in_segment(s, r, i, len) {
                    continue;
                }
                let (to, at) = (self.route_of[s], self.pos_of[s]);
                clock.count();
                if let Some(delta) = self.cost_relocate(r, i, len, to, at) {
                    consider(delta, Move::Relocate { from: r, start: i, len, to, at }, &mut best);
                }
            }
        }

        for k in 0..self.pred[u].len() {
            let p = self.pred[u][k];
            let v = self.next(p);
            if v != 0 && v != u {
                clock.count();
                let delta = self.cost_swap(u, v);
                consider(delta, Move::Swap { u, v }, &mut best);
            }
            let rp = self.route_of[p];
            if rp != r {
                clock.count();
                if let Some(delta) = self.cost_tails(rp, self.pos_of[p] + 1, r, i) {
                    consider(delta, Move::Tails { r1: rp, cut1: self.pos_of[p] + 1, r2: r, cut2: i }, &mut best);
                }
            }
        }
        for k in 0..self.succ[u].len() {
            let s = self.succ[u][k];
            let v = self.prev(s);
            if v != 0 && v != u {
                clock.count();
                let delta = self.cost_swap(u, v);
                consider(delta, Move::Swap { u, v }, &mut best);
            }
            let rs = self.route_of[s];
            if rs != r {
                clock.count();
                if let Some(delta) = self.cost_tails(r, i + 1, rs, self.pos_of[s]) {
                    consider(delta, Move::Tails { r1: r, cut1: i + 1, r2: rs, cut2: self.pos_of[s] }, &mut best);
                }
            }
        }
        best
    }

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Relocate { from, start, len, to, at } => {
                self.touch(from);
                self.touch(to);
                if from == to {
                    let seg: Vec<usize> = self.routes[from].drain(start..start + len).collect();
                    let ins = if at > start { at - len } else { at };
                    self.routes[from].splice(ins..ins, seg);
                } else {
                    let seg: Vec<usize> = self.routes[from].drain(start..start + len).collect();
                    self.routes[to].splice(at..at, seg);
                }
                self.reindex(from);
                self.reindex(to);
                self.enqueue_route(from);
                self.enqueue_route(to);
            }
            Move::Swap { u, v } => {
                let (ru, rv) = (self.route_of[u], self.route_of[v]);
                let (iu, iv) = (self.pos_of[u], self.pos_of[v]);
                self.touch(ru);
                self.touch(rv);
                self.routes[ru][iu] = v;
                self.routes[rv][iv] = u;
                self.reindex(ru);
                self.reindex(rv);
                self.enqueue_route(ru);
                self.enqueue_route(rv);
            }
            Move::Tails { r1, cut1, r2, cut2 } => {
                self.touch(r1);
                self.touch(r2);
                let tail1 = self.routes[r1].split_off(cut1);
                let tail2 = self.routes[r2].split_off(cut2);
                self.routes[r1].extend(tail2);
                self.routes[r2].extend(tail1);
                self.reindex(r1);
                self.reindex(r2);
                self.enqueue_route(r1);
                self.enqueue_route(r2);
            }
        }
        debug_assert!(self.routes.iter().all(|r| !r.is_empty() && r.len() <= self.cap));
    }

    /// Runs the queue to a local optimum. Returns `true` if the budget ran
    /// out first.
    fn descend(&mut self, clock: &mut Clock) -> bool {
        while let Some(u) = self.queue.pop_front() {
            self.queued[u] = false;
            if self.tick(clock) {
                return true;
            }
            if let Some((_, mv)) = self.best_move(u, clock) {
                self.apply(mv);
            }
        }
        false
    }

    /// Routes near a random job: its own plus those of a few candidates.
    fn pick_routes(&mut self, count: usize) -> Vec<usize> {
        let seed_job = self.rng.gen_range(1..=self.m);
        let mut routes = vec![self.route_of[seed_job]];
        let pool: Vec<usize> = self.pred[seed_job]
            .iter()
            .chain(&self.succ[seed_job])
            .map(|&v| self.route_of[v])
            .collect();
        let mut tries = 0;
        while routes.len() < count.min(self.routes.len()) && tries < 4 * count + 8 {
            tries += 1;
            let r = if !pool.is_empty() && self.rng.gen_bool(0.75) {
                pool[self.rng.gen_range(0..pool.len())]
            } else {
                self.rng.gen_range(0..self.routes.len())
            };
            if !routes.contains(&r) {
                routes.push(r);
            }
        }
        routes
    }

    /// Removes a random segment from a few nearby routes and reinserts the
    /// jobs at their cheapest feasible positions.
    fn ruin_and_recreate(&mut self, clock: &mut Clock) {
        let count = self.rng.gen_range(1..=3);
        let routes = self.pick_routes(count);
        let mut removed = Vec::new();
        for &r in &routes {
            let len = self.routes[r].len();
            if len <= 1 {
                continue;
            }
            let seg = self.rng.gen_range(1..=(len - 1).min(MAX_SEGMENT + 1));
            let start = self.rng.gen_range(0..=len - seg);
            self.touch(r);
            removed.extend(self.routes[r].drain(start..start + seg));
            self.reindex(r);
        }
        removed.shuffle(&mut self.rng);
        let open: Vec<usize> = (0..self.routes.len())
            .filter(|&r| self.routes[r].len() < self.cap)
            .collect();
        for job in removed {
            let mut best = (f64::INFINITY, 0, 0);
            for &r in &open {
                let len = self.routes[r].len();
                if len >= self.cap {
                    continue;
                }
                for at in 0..=len {
                    clock.count();
                    let x = if at == 0 { 0 } else { self.routes[r][at - 1] };
                    let y = self.at(r, at);
                    let delta = self.c(x, job) + self.c(job, y) - self.c(x, y);
                    if delta < best.0 {
                        best = (delta, r, at);
                    }
                }
            }
            let (_, r, at) = best;
            self.touch(r);
            self.routes[r].insert(at, job);
            self.reindex(r);
        }
        for r in routes.into_iter().chain(open) {
            if self.undo_stamp[r] == self.epoch {
                self.enqueue_route(r);
            }
        }
    }

    /// Shuffles the jobs of several nearby routes, keeping route sizes.
    fn scramble(&mut self, clock: &mut Clock) {
        let count = (self.routes.len() / 8).clamp(2, 6);
        let routes = self.pick_routes(count);
        let mut pool: Vec<usize> = Vec::new();
        for &r in &routes {
            pool.extend_from_slice(&self.routes[r]);
        }
        pool.shuffle(&mut self.rng);
        let mut it = pool.into_iter();
        for &r in &routes {
            self.touch(r);
            let len = self.routes[r].len();
            self.routes[r] = it.by_ref().take(len).collect();
            self.reindex(r);
            clock.count();
        }
        for &r in &routes {
            self.enqueue_route(r);
        }
    }

    fn stall_limit(&self) -> u64 {
        50 + self.m as u64
    }

    /// Improves until the budget is spent; returns the best routes.
    pub(crate) fn run(&mut self, clock: &mut Clock) -> Vec<Vec<usize>> {
        if self.m <= 1 || self.best_cost <= 0.0 {
            return self.finish(clock);
        }
        self.enqueue_all_shuffled();
        if self.descend(clock) {
            return self.finish(clock);
        }
        if self.total() < self.best_cost {
            self.save_best();
        }
        let mut stall = 0u64;
        loop {
            if self.best_cost <= 0.0 || self.tick(clock) {
                break;
            }
            let forced = stall > self.stall_limit();
            if forced {
                stall = 0;
                self.restore_best();
            }
            self.begin_epoch();
            let saved = self.total();
            clock.count();
            if forced {
                self.scramble(clock);
            } else {
                self.ruin_and_recreate(clock);
            }
            self.kicks += 1;
            let stopped = self.descend(clock);
            let now = self.total();
            if now < self.best_cost {
                self.save_best();
                stall = 0;
            } else {
                stall += 1;
            }
            if stopped {
                break;
            }
            if !forced && now > saved {
                self.revert();
            }
        }
        self.finish(clock)
    }

    fn finish(&mut self, clock: &mut Clock) -> Vec<Vec<usize>> {
        if self.total() < self.best_cost {
            self.save_best();
        }
        self.tick(clock);
        clock.finish(self.best_cost);
        self.best_routes.clone()
    }
}

/// `succ[u]`: jobs `v` with the cheapest `u -> v`; `pred[u]`: jobs `v` with
/// the cheapest `v -> u`. Ties broken by index.
fn candidate_lists(d: &JobDistanceMatrix, k: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let m = d.jobs();
    let k = k.min(m.saturating_sub(1));
    let pick = |cost: &dyn Fn(usize) -> f64, u: usize| -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = (1..=m).filter(|&v| v != u).map(|v| (cost(v), v)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < all.len() && k > 0 {
            all.select_nth_unstable_by(k - 1, cmp);
            all.truncate(k);
        }
        all.truncate(k);
        all.sort_unstable_by(cmp);
        all.into_iter().map(|(_, v)| v).collect()
    };
    let mut succ = vec![Vec::new(); m + 1];
    let mut pred = vec![Vec::new(); m + 1];
    for u in 1..=m {
        succ[u] = pick(&|v| d.get(u, v), u);
        pred[u] = pick(&|v| d.get(v, u), u);
    }
    (succ, pred)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Improved(Schedule),
    NoImprovement,
}

/// Applies the best improving move of the first job (in random order) that
/// has one. Every operator checks capacity and keeps cycles non-empty.
pub fn local_search_step<R: Rng>(
    s: &Schedule,
    d: &JobDistanceMatrix,
    capacity: usize,
    rng: &mut R,
) -> StepOutcome {
    if d.jobs() <= 1 || s.cycles.is_empty() {
        return StepOutcome::NoImprovement;
    }
    let mut engine = Engine::new(d, capacity, &s.cycles, rng.gen());
    let mut order: Vec<usize> = (1..=d.jobs()).collect();
    order.shuffle(rng);
    let mut clock = Clock::unbounded();
    for u in order {
        if let Some((_, mv)) = engine.best_move(u, &mut clock) {
            engine.apply(mv);
            let mut out = Schedule::from_cycles(engine.routes.clone(), d);
            out.stats = s.stats;
            return StepOutcome::Improved(out);
        }
    }
    StepOutcome::NoImprovement
}
