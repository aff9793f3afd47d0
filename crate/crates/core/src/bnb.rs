//! The branch-and-bound search over job sequences.
//!
//! Depth-first search on partial sequences. One child per unique remaining
//! processing time (equal jobs are interchangeable), children in ascending
//! processing-time order. Each node is bounded by the gcd relaxation; a
//! node whose relaxed blocks can pack all un-fixed jobs yields a feasible
//! incumbent matching its bound, closing the subtree. Subtrees with
//! `lb >= ub` are pruned.

use std::time::{Duration, Instant};

use crate::bounds::{lower_bound, BlockList, BoundMode, LowerBound, PartialSequence};
use crate::model::{validate, Instance, Schedule};
use crate::num::{is_finite, Rational, INF};
use crate::packing::{bin_pack, initial_upper_bound, PackAssignment, PackOutcome};
use crate::seqtec::LevelsArray;
use crate::switching::{spaces, SwitchingTable};
use crate::{Error, Result};

/// Feature toggles and budgets for one solve call.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Tighten the relaxation with the gcd of the remaining processing
    /// times (off = unit relaxation).
    pub use_gcd: bool,
    /// Try to pack the un-fixed jobs into the relaxed blocks at each node.
    pub use_primal_packing: bool,
    /// Seed the incumbent from the root blocks before searching.
    pub use_initial_heuristic: bool,
    /// Budget per in-search packing call.
    pub pack_budget: Duration,
    /// Budget for the initial-incumbent assignment problem.
    pub init_budget: Duration,
    /// Attempt packing only at depths divisible by this stride.
    pub pack_depth_stride: usize,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            use_gcd: true,
            use_primal_packing: true,
            use_initial_heuristic: true,
            pack_budget: Duration::from_millis(50),
            init_budget: Duration::from_millis(500),
            pack_depth_stride: 1,
            time_limit: None,
            node_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal: `ub == lb` and the schedule validates.
    Optimal,
    /// A feasible incumbent exists but a limit stopped the proof.
    Feasible,
    /// No feasible schedule exists.
    Infeasible,
    /// A limit stopped the search before any incumbent was found.
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub ub: Option<Rational>,
    pub lb: Option<Rational>,
    pub schedule: Option<Schedule>,
    pub nodes: u64,
    pub wall_time: Duration,
    /// Time spent precomputing the switching table.
    pub preprocess_time: Duration,
}

/// Emitted once per evaluated search node.
#[derive(Debug, Clone)]
pub struct ProgressEvent {
    pub nodes: u64,
    pub depth: usize,
    /// This node's relaxation bound; `None` when the node admits no
    /// relaxed placement at all.
    pub node_lb: Option<Rational>,
    /// Incumbent objective after processing the node.
    pub incumbent: Option<Rational>,
}

/// Turns a packing certificate into a schedule: each block's jobs start
/// back-to-back at the block's start, slack (if any) shifts into the
/// trailing switching gap, and the gaps are filled with optimal switching
/// behaviors. The result is validated before being returned.
pub fn reconstruct_schedule(
    instance: &Instance,
    table: &SwitchingTable,
    blocks: &BlockList,
    assignment: &PackAssignment,
) -> Result<Schedule> {
    if assignment.per_block.len() != blocks.len() {
        return Err(Error::InvalidInstance(
            "assignment must have one job list per block".into(),
        ));
    }
    let mut placed = vec![false; instance.n_jobs()];
    let mut starts = vec![0usize; instance.n_jobs()];
    let mut runs: BlockList = Vec::new();
    for (block, members) in blocks.iter().zip(&assignment.per_block) {
        let mut at = block.start;
        for &j in members {
            if placed[j] {
                return Err(Error::InvalidInstance(format!("job {j} assigned twice")));
            }
            placed[j] = true;
            starts[j] = at;
            at += instance.jobs()[j];
        }
        let filled = at - block.start;
        if filled > block.len {
            return Err(Error::InvalidInstance(
                "assignment exceeds block capacity".into(),
            ));
        }
        if filled > 0 {
            runs.push(crate::bounds::Block {
                start: block.start,
                len: filled,
            });
        }
    }
    if !placed.iter().all(|p| *p) {
        return Err(Error::InvalidInstance("assignment must cover every job".into()));
    }
    let schedule = stitch_schedule(instance, table, &runs, starts)?;
    validate(instance, &schedule).map_err(Error::ReconstructionMismatch)?;
    Ok(schedule)
}

/// Lays optimal switching behaviors around the given processing runs.
/// Runs must be ascending and non-overlapping; adjacent runs are fine.
pub(crate) fn stitch_schedule(
    instance: &Instance,
    table: &SwitchingTable,
    runs: &[crate::bounds::Block],
    starts: Vec<usize>,
) -> Result<Schedule> {
    let h = instance.horizon();
    let d = instance.diagram();
    let (off, proc) = (d.off(), d.proc());
    let mut labels = vec![(off, off); h];
    let mut anchor = 1usize;
    for run in runs {
        // behavior() requires run.start > anchor, which also rules out
        // overlapping runs.
        let behavior = table
            .behavior(instance, anchor, run.start)
            .ok_or_else(|| {
                Error::MalformedBehavior(format!("no switching from {anchor} to {}", run.start))
            })?;
        for (k, lab) in behavior.into_iter().enumerate() {
            labels[anchor + k] = lab; // intervals anchor+1 ..= run.start-1
        }
        for i in run.start..run.start + run.len {
            labels[i - 1] = (proc, proc);
        }
        anchor = run.start + run.len - 1;
    }
    let tail = table
        .behavior(instance, anchor, h)
        .ok_or_else(|| Error::MalformedBehavior(format!("no switching from {anchor} to {h}")))?;
    for (k, lab) in tail.into_iter().enumerate() {
        labels[anchor + k] = lab;
    }
    Ok(Schedule {
        starts,
        transitions: labels,
    })
}

struct Search<'a, 'cb> {
    instance: &'a Instance,
    table: &'a SwitchingTable,
    config: &'a SearchConfig,
    levels: LevelsArray<'a>,
    fixed: Vec<usize>,
    remaining: Vec<usize>,
    incumbent: Option<(i64, Schedule)>,
    nodes: u64,
    deadline: Option<Instant>,
    stopped: bool,
    /// Min bound over subtrees left unexplored when a limit fired.
    stop_floor: i64,
    on_node: &'cb mut dyn FnMut(&ProgressEvent),
}

impl Search<'_, '_> {
    fn hit_limit(&self) -> bool {
        if let Some(limit) = self.config.node_limit {
            if self.nodes >= limit {
                return true;
            }
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return true;
            }
        }
        false
    }

    fn ub_scaled(&self) -> i64 {
        self.incumbent.as_ref().map_or(INF, |(v, _)| *v)
    }

    fn floor(&mut self, lb: i64) {
        self.stop_floor = self.stop_floor.min(lb);
    }

    fn scale(&self) -> i64 {
        self.instance.scaled().scale
    }

    fn emit(&mut self, depth: usize, node_lb: Option<i64>) {
        let scale = self.scale();
        let event = ProgressEvent {
            nodes: self.nodes,
            depth,
            node_lb: node_lb.map(|v| Rational::new(v, scale)),
            incumbent: self
                .incumbent
                .as_ref()
                .map(|(v, _)| Rational::new(*v, scale)),
        };
        (self.on_node)(&event);
    }

    /// Installs the schedule implied by a relaxed optimum whose blocks were
    /// exactly refilled: the fixed prefix fills blocks left to right (it
    /// owns each block's leading `len - free` intervals), the packed jobs
    /// take the remaining capacity.
    fn take_incumbent(&mut self, lb: &LowerBound, packed: Option<PackAssignment>) -> Result<bool> {
        let mut merged: Vec<Vec<usize>> = vec![Vec::new(); lb.blocks.len()];
        let mut cursor = 0usize;
        let mut room = lb
            .blocks
            .first()
            .map_or(0, |b| b.len - lb.free[0]);
        for &j in &self.fixed {
            let p = self.instance.jobs()[j];
            while room == 0 {
                cursor += 1;
                room = lb.blocks[cursor].len - lb.free[cursor];
            }
            debug_assert!(p <= room, "fixed job straddles a block boundary");
            merged[cursor].push(j);
            room -= p;
        }
        if let Some(pack) = packed {
            for (b, mut members) in pack.per_block.into_iter().enumerate() {
                merged[b].append(&mut members);
            }
        }
        let assignment = PackAssignment { per_block: merged };
        let schedule = reconstruct_schedule(self.instance, self.table, &lb.blocks, &assignment)?;
        let tec = validate(self.instance, &schedule).map_err(Error::ReconstructionMismatch)?;
        let tec_scaled = *(tec * Rational::from_integer(self.scale())).numer();
        debug_assert_eq!(tec_scaled, lb.lb_scaled, "exact refill must cost the bound");
        if tec_scaled < self.ub_scaled() {
            self.incumbent = Some((tec_scaled, schedule));
        }
        // Pruning the subtree is only sound when the incumbent matches the
        // node bound; anything else would be an internal bug, so stay safe.
        Ok(tec_scaled <= lb.lb_scaled)
    }

    fn dfs(&mut self, depth: usize) -> bool {
        if self.hit_limit() {
            self.stopped = true;
            return false;
        }
        self.nodes += 1;

        let partial = PartialSequence {
            fixed: self.fixed.clone(),
            remaining: self.remaining.clone(),
        };
        let mode = if self.config.use_gcd {
            BoundMode::Gcd
        } else {
            BoundMode::Unit
        };
        let lb = match lower_bound(&partial, &mut self.levels, mode) {
            Ok(lb) => lb,
            Err(_) => {
                // No relaxed placement: nothing below this node is feasible.
                self.emit(depth, None);
                return true;
            }
        };
        self.emit(depth, Some(lb.lb_scaled));

        if lb.lb_scaled >= self.ub_scaled() {
            return true;
        }

        if self.remaining.is_empty() {
            // Leaf: the relaxation *is* the sequence optimum.
            self.take_incumbent(&lb, None)
                .expect("leaf schedule reconstruction is exact");
            return true;
        }

        if self.config.use_primal_packing && depth.is_multiple_of(self.config.pack_depth_stride) {
            let jobs: Vec<(usize, usize)> = self
                .remaining
                .iter()
                .map(|&j| (j, self.instance.jobs()[j]))
                .collect();
            if let PackOutcome::Feasible(pack) = bin_pack(&lb.free, &jobs, self.config.pack_budget)
            {
                let closed = self
                    .take_incumbent(&lb, Some(pack))
                    .expect("packed schedule reconstruction is exact");
                if closed {
                    return true;
                }
            }
        }

        // One branch per unique remaining processing time, ascending;
        // among equal jobs the smallest index goes first.
        let mut branches: Vec<(usize, usize)> = Vec::new(); // (p, job)
        for &j in &self.remaining {
            let p = self.instance.jobs()[j];
            match branches.iter_mut().find(|(bp, _)| *bp == p) {
                Some((_, bj)) => *bj = (*bj).min(j),
                None => branches.push((p, j)),
            }
        }
        branches.sort_unstable();

        for (_, job) in branches {
            let pos = self.remaining.iter().position(|&r| r == job).unwrap();
            self.remaining.remove(pos);
            self.fixed.push(job);
            self.levels.join(job).expect("join of an un-fixed job");
            let done = self.dfs(depth + 1);
            self.levels.split().expect("split mirrors join");
            self.fixed.pop();
            self.remaining.insert(
                self.remaining.partition_point(|&r| r < job),
                job,
            );
            if !done {
                self.floor(lb.lb_scaled);
                return false;
            }
            if lb.lb_scaled >= self.ub_scaled() {
                break;
            }
        }
        true
    }
}

/// Solves an instance to proven optimality (budgets permitting).
pub fn solve(instance: &Instance, config: &SearchConfig) -> SolveResult {
    let mut sink = |_: &ProgressEvent| {};
    solve_with_progress(instance, config, &mut sink)
}

/// Like [`solve`], with a callback invoked at every node boundary.
pub fn solve_with_progress(
    instance: &Instance,
    config: &SearchConfig,
    on_node: &mut dyn FnMut(&ProgressEvent),
) -> SolveResult {
    let start = Instant::now();
    let deadline = config.time_limit.map(|t| start + t);
    let finish = |status, ub: Option<Rational>, lb, schedule, nodes, preprocess| SolveResult {
        status,
        ub,
        lb,
        schedule,
        nodes,
        wall_time: start.elapsed(),
        preprocess_time: preprocess,
    };

    if deadline.is_some_and(|d| Instant::now() >= d) {
        return finish(SolveStatus::TimedOut, None, None, None, 0, Duration::ZERO);
    }

    let window = match crate::model::processing_window(instance) {
        Ok(w) => w,
        Err(_) => return finish(SolveStatus::Infeasible, None, None, None, 0, Duration::ZERO),
    };
    if instance.total_work() > window.len() {
        return finish(SolveStatus::Infeasible, None, None, None, 0, Duration::ZERO);
    }

    let pre_start = Instant::now();
    let table = spaces(instance);
    let preprocess = pre_start.elapsed();
    let levels = LevelsArray::new(instance, &table, instance.jobs().to_vec())
        .expect("capacity was checked");
    let mut search = Search {
        instance,
        table: &table,
        config,
        levels,
        fixed: Vec::new(),
        remaining: (0..instance.n_jobs()).collect(),
        incumbent: None,
        nodes: 0,
        deadline,
        stopped: false,
        stop_floor: INF,
        on_node,
    };

    if config.use_initial_heuristic && instance.n_jobs() > 0 && !search.hit_limit() {
        let mut scratch = LevelsArray::new(instance, &table, instance.jobs().to_vec())
            .expect("capacity was checked");
        let partial = PartialSequence::new(instance.n_jobs(), &[]).expect("empty prefix");
        let mode = if config.use_gcd { BoundMode::Gcd } else { BoundMode::Unit };
        if let Ok(root) = lower_bound(&partial, &mut scratch, mode) {
            if let Ok((ub, schedule)) =
                initial_upper_bound(instance, &table, &root.blocks, config.init_budget)
            {
                let scaled = *(ub * Rational::from_integer(instance.scaled().scale)).numer();
                search.incumbent = Some((scaled, schedule));
            }
        }
    }

    let completed = search.dfs(0);
    let scale = instance.scaled().scale;
    let nodes = search.nodes;
    let incumbent = search.incumbent.take();
    match (completed, incumbent) {
        (true, Some((tec, schedule))) => {
            let obj = Rational::new(tec, scale);
            finish(
                SolveStatus::Optimal,
                Some(obj),
                Some(obj),
                Some(schedule),
                nodes,
                preprocess,
            )
        }
        (true, None) => finish(SolveStatus::Infeasible, None, None, None, nodes, preprocess),
        (false, Some((tec, schedule))) => {
            let ub = Rational::new(tec, scale);
            let lb = if is_finite(search.stop_floor) {
                Rational::new(search.stop_floor.min(tec), scale)
            } else {
                ub
            };
            finish(SolveStatus::Feasible, Some(ub), Some(lb), Some(schedule), nodes, preprocess)
        }
        (false, None) => {
            let lb = is_finite(search.stop_floor)
                .then(|| Rational::new(search.stop_floor, scale));
            finish(SolveStatus::TimedOut, None, lb, None, nodes, preprocess)
        }
    }
}
