//! The two packing subroutines behind the primal heuristics.
//!
//! `bin_pack` decides whether jobs fit into blocks of given capacities
//! (first-fit-decreasing, then an exact depth-first search under a time
//! budget). `bin_find` assigns jobs to blocks minimizing the largest
//! deviation from suggested block sizes; its solution turns the root
//! relaxation's blocks into aggregated jobs for the initial upper bound.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::bounds::BlockList;
use crate::model::{Instance, Schedule};
use crate::num::Rational;
use crate::seqtec::LevelsArray;
use crate::switching::SwitchingTable;
use crate::{Error, Result};

/// Jobs assigned to each block, in placement order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackAssignment {
    pub per_block: Vec<Vec<usize>>,
}

/// Three-valued packing result: `Unknown` means the budget ran out before
/// the search could prove either answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackOutcome {
    Feasible(PackAssignment),
    Infeasible,
    Unknown,
}

/// Sorts jobs by decreasing processing time, ties by ascending index.
fn decreasing(jobs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut sorted = jobs.to_vec();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    sorted
}

/// Can `jobs` (as `(id, processing_time)`) be partitioned into blocks of
/// the given capacities? Exact: `Infeasible` is only returned after an
/// exhausted search.
pub fn bin_pack(capacities: &[usize], jobs: &[(usize, usize)], budget: Duration) -> PackOutcome {
    let total: usize = jobs.iter().map(|j| j.1).sum();
    let cap_total: usize = capacities.iter().sum();
    if total > cap_total {
        return PackOutcome::Infeasible;
    }
    if jobs.is_empty() {
        return PackOutcome::Feasible(PackAssignment {
            per_block: vec![Vec::new(); capacities.len()],
        });
    }
    let max_cap = capacities.iter().copied().max().unwrap_or(0);
    let sorted = decreasing(jobs);
    if sorted[0].1 > max_cap {
        return PackOutcome::Infeasible;
    }

    // First-fit decreasing often settles it immediately.
    let mut residual: Vec<usize> = capacities.to_vec();
    let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); capacities.len()];
    let mut ok = true;
    for &(id, p) in &sorted {
        match residual.iter().position(|r| *r >= p) {
            Some(b) => {
                residual[b] -= p;
                per_block[b].push(id);
            }
            None => {
                ok = false;
                break;
            }
        }
    }
    if ok {
        return PackOutcome::Feasible(PackAssignment { per_block });
    }

    // Exact search over job-to-block choices, largest jobs first.
    struct Dfs<'a> {
        sorted: &'a [(usize, usize)],
        residual: Vec<usize>,
        choice: Vec<usize>,
        suffix: Vec<usize>,
        failed: HashSet<(usize, Vec<usize>)>,
        deadline: Instant,
        ticks: u32,
        out_of_time: bool,
    }
    impl Dfs<'_> {
        fn run(&mut self, depth: usize) -> bool {
            if depth == self.sorted.len() {
                return true;
            }
            self.ticks += 1;
            if self.ticks.is_multiple_of(1024) && Instant::now() >= self.deadline {
                self.out_of_time = true;
                return false;
            }
            let free: usize = self.residual.iter().sum();
            if self.suffix[depth] > free {
                return false;
            }
            let mut key = self.residual.clone();
            key.sort_unstable();
            if self.failed.contains(&(depth, key.clone())) {
                return false;
            }
            let p = self.sorted[depth].1;
            // Equal jobs go into non-decreasing block indices.
            let start = if depth > 0 && self.sorted[depth - 1].1 == p {
                self.choice[depth - 1]
            } else {
                0
            };
            let mut tried: Vec<usize> = Vec::new();
            for b in start..self.residual.len() {
                if self.residual[b] < p || tried.contains(&self.residual[b]) {
                    continue;
                }
                tried.push(self.residual[b]);
                self.residual[b] -= p;
                self.choice[depth] = b;
                if self.run(depth + 1) {
                    return true;
                }
                self.residual[b] += p;
                if self.out_of_time {
                    return false;
                }
            }
            self.failed.insert((depth, key));
            false
        }
    }

    let suffix: Vec<usize> = {
        let mut s = vec![0; sorted.len() + 1];
        for i in (0..sorted.len()).rev() {
            s[i] = s[i + 1] + sorted[i].1;
        }
        s
    };
    let mut dfs = Dfs {
        sorted: &sorted,
        residual: capacities.to_vec(),
        choice: vec![0; sorted.len()],
        suffix,
        failed: HashSet::new(),
        deadline: Instant::now() + budget,
        ticks: 0,
        out_of_time: false,
    };
    if dfs.run(0) {
        let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); capacities.len()];
        for (idx, &(id, _)) in sorted.iter().enumerate() {
            per_block[dfs.choice[idx]].push(id);
        }
        PackOutcome::Feasible(PackAssignment { per_block })
    } else if dfs.out_of_time {
        PackOutcome::Unknown
    } else {
        PackOutcome::Infeasible
    }
}

/// Result of the block-enlargement assignment problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinFindResult {
    /// Achieved maximal deviation `max_i |s_i - b_i|`.
    pub z: usize,
    /// New block sizes (sum of assigned processing times).
    pub sizes: Vec<usize>,
    /// Jobs per block, decreasing processing time, ties by index.
    pub assignment: Vec<Vec<usize>>,
    /// False when the budget expired before optimality was proven.
    pub optimal: bool,
}

struct FindCtx<'a> {
    sorted: &'a [(usize, usize)],
    targets: &'a [usize],
    suffix: Vec<usize>,
    deadline: Instant,
    ticks: u32,
    out_of_time: bool,
}

impl FindCtx<'_> {
    fn tick(&mut self) -> bool {
        self.ticks += 1;
        if self.ticks.is_multiple_of(1024) && Instant::now() >= self.deadline {
            self.out_of_time = true;
        }
        self.out_of_time
    }

    /// Sound lower bound on the final deviation given partial sums `s` and
    /// `depth` jobs already placed: current excesses cannot shrink, and the
    /// remaining work can fill at most its own total of the deficits.
    fn dev_floor(&self, s: &[usize], depth: usize) -> usize {
        let k = self.targets.len();
        let rest = self.suffix[depth];
        let mut excess = 0usize;
        let mut deficit_total = 0usize;
        for b in 0..k {
            if s[b] >= self.targets[b] {
                excess = excess.max(s[b] - self.targets[b]);
            } else {
                deficit_total += self.targets[b] - s[b];
            }
        }
        let unavoidable = deficit_total.saturating_sub(rest).div_ceil(k);
        excess.max(unavoidable)
    }

    fn search(&mut self, depth: usize, s: &mut [usize], choice: &mut [usize], best: &mut Option<(usize, Vec<usize>)>) {
        if self.tick() {
            return;
        }
        let bound = self.dev_floor(s, depth);
        if let Some((bz, _)) = best {
            if bound >= *bz {
                return;
            }
        }
        if depth == self.sorted.len() {
            let z = (0..self.targets.len())
                .map(|b| s[b].abs_diff(self.targets[b]))
                .max()
                .unwrap_or(0);
            let replace = best.as_ref().is_none_or(|(bz, _)| z < *bz);
            if replace {
                *best = Some((z, choice.to_vec()));
            }
            return;
        }
        let p = self.sorted[depth].1;
        let start = if depth > 0 && self.sorted[depth - 1].1 == p {
            choice[depth - 1]
        } else {
            0
        };
        // Blocks are interchangeable only when both the current sum and
        // the target agree.
        let mut tried: Vec<(usize, usize)> = Vec::new();
        for b in start..self.targets.len() {
            if tried.contains(&(s[b], self.targets[b])) {
                continue;
            }
            tried.push((s[b], self.targets[b]));
            s[b] += p;
            choice[depth] = b;
            self.search(depth + 1, s, choice, best);
            s[b] -= p;
            if self.out_of_time {
                return;
            }
        }
    }

    /// Can the jobs from `depth` on be placed so the final deviation stays
    /// within `z_cap`, with partial sums `s`? Used by the lexicographic
    /// tie-breaking pass.
    fn completable(&mut self, depth: usize, s: &mut [usize], prev_choice: Option<(usize, usize)>, z_cap: usize) -> bool {
        if self.tick() {
            return false;
        }
        if self.dev_floor(s, depth) > z_cap {
            return false;
        }
        if depth == self.sorted.len() {
            return (0..self.targets.len()).all(|b| s[b].abs_diff(self.targets[b]) <= z_cap);
        }
        let p = self.sorted[depth].1;
        let start = match prev_choice {
            Some((pp, pb)) if pp == p => pb,
            _ => 0,
        };
        let mut tried: Vec<(usize, usize)> = Vec::new();
        for b in start..self.targets.len() {
            if s[b] + p > self.targets[b] + z_cap || tried.contains(&(s[b], self.targets[b])) {
                continue;
            }
            tried.push((s[b], self.targets[b]));
            s[b] += p;
            if self.completable(depth + 1, s, Some((p, b)), z_cap) {
                s[b] -= p;
                return true;
            }
            s[b] -= p;
            if self.out_of_time {
                return false;
            }
        }
        false
    }
}

/// Minimizes `max_i |s_i - b_i|` over all assignments of jobs to blocks.
/// Among optima the assignment vector (block index per job, in job-index
/// order) is lexicographically smallest, budget permitting.
pub fn bin_find(targets: &[usize], jobs: &[(usize, usize)], budget: Duration) -> Result<BinFindResult> {
    if targets.is_empty() || jobs.is_empty() {
        return Err(Error::InvalidInstance("bin_find needs blocks and jobs".into()));
    }
    let sorted = decreasing(jobs);
    let suffix: Vec<usize> = {
        let mut s = vec![0; sorted.len() + 1];
        for i in (0..sorted.len()).rev() {
            s[i] = s[i + 1] + sorted[i].1;
        }
        s
    };
    let mut ctx = FindCtx {
        sorted: &sorted,
        targets,
        suffix,
        deadline: Instant::now() + budget,
        ticks: 0,
        out_of_time: false,
    };

    // Greedy incumbent: each job to the block where it deviates least.
    let mut s0 = vec![0usize; targets.len()];
    let mut greedy = vec![0usize; sorted.len()];
    for (idx, &(_, p)) in sorted.iter().enumerate() {
        let b = (0..targets.len())
            .min_by_key(|&b| (s0[b] + p).abs_diff(targets[b]))
            .unwrap();
        s0[b] += p;
        greedy[idx] = b;
    }
    let z0 = (0..targets.len())
        .map(|b| s0[b].abs_diff(targets[b]))
        .max()
        .unwrap();
    let mut best = Some((z0, greedy));

    let mut s = vec![0usize; targets.len()];
    let mut choice = vec![0usize; sorted.len()];
    ctx.search(0, &mut s, &mut choice, &mut best);
    let proven = !ctx.out_of_time;
    let (z, mut choice_by_pos) = best.expect("greedy incumbent always exists");

    // Lexicographic pass over job indices: pin each job to the smallest
    // block that still completes within z.
    if proven {
        let by_index = {
            let mut jobs_sorted = jobs.to_vec();
            jobs_sorted.sort_by_key(|j| j.0);
            jobs_sorted
        };
        let mut pinned: Vec<(usize, usize, usize)> = Vec::new(); // (id, p, block)
        let mut feasible_all = true;
        for &(id, p) in &by_index {
            let mut placed = false;
            for b in 0..targets.len() {
                // Re-run completability with this job pinned to block b and
                // the rest (all jobs not yet pinned) free.
                let mut s = vec![0usize; targets.len()];
                for &(_, pp, pb) in &pinned {
                    s[pb] += pp;
                }
                if s[b] + p > targets[b] + z {
                    continue;
                }
                s[b] += p;
                let free: Vec<(usize, usize)> = sorted
                    .iter()
                    .filter(|(jid, _)| *jid != id && !pinned.iter().any(|(pid, _, _)| pid == jid))
                    .copied()
                    .collect();
                let mut sub = FindCtx {
                    sorted: &free,
                    targets,
                    suffix: {
                        let mut sfx = vec![0; free.len() + 1];
                        for i in (0..free.len()).rev() {
                            sfx[i] = sfx[i + 1] + free[i].1;
                        }
                        sfx
                    },
                    deadline: ctx.deadline,
                    ticks: 0,
                    out_of_time: false,
                };
                if sub.completable(0, &mut s, None, z) {
                    pinned.push((id, p, b));
                    placed = true;
                    break;
                }
                if sub.out_of_time {
                    feasible_all = false;
                    break;
                }
            }
            if !placed {
                feasible_all = false;
                break;
            }
        }
        if feasible_all {
            // Rewrite the positional choices from the pinned per-index ones.
            for (pos, &(id, _)) in sorted.iter().enumerate() {
                let (_, _, b) = pinned.iter().find(|(pid, _, _)| *pid == id).unwrap();
                choice_by_pos[pos] = *b;
            }
        }
    }

    let mut sizes = vec![0usize; targets.len()];
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); targets.len()];
    for (pos, &(id, p)) in sorted.iter().enumerate() {
        sizes[choice_by_pos[pos]] += p;
        assignment[choice_by_pos[pos]].push(id);
    }
    Ok(BinFindResult {
        z,
        sizes,
        assignment,
        optimal: proven,
    })
}

/// Initial incumbent from the root relaxation: enlarge/shrink the root
/// blocks into aggregated jobs via `bin_find`, schedule the aggregates in
/// block order, then expand each aggregate into its real jobs back-to-back.
pub fn initial_upper_bound(
    instance: &Instance,
    table: &SwitchingTable,
    root_blocks: &BlockList,
    budget: Duration,
) -> Result<(Rational, Schedule)> {
    let jobs: Vec<(usize, usize)> = instance.jobs().iter().copied().enumerate().collect();
    let targets: Vec<usize> = root_blocks.iter().map(|b| b.len).collect();
    let found = bin_find(&targets, &jobs, budget)?;

    // Drop empty blocks; keep block order.
    let mut agg_lengths: Vec<usize> = Vec::new();
    let mut agg_jobs: Vec<Vec<usize>> = Vec::new();
    for (b, &size) in found.sizes.iter().enumerate() {
        if size > 0 {
            agg_lengths.push(size);
            agg_jobs.push(found.assignment[b].clone());
        }
    }

    let mut levels = LevelsArray::new(instance, table, agg_lengths.clone())
        .map_err(|_| Error::InfeasibleSequence)?;
    for k in 0..agg_lengths.len() {
        levels.join(k)?;
    }
    let value = levels.evaluate_tail(1);
    if !crate::num::is_finite(value) {
        return Err(Error::InfeasibleSequence);
    }
    let intervals = levels.backtrack(1).ok_or(Error::InfeasibleSequence)?;

    // Expand aggregates: constituent jobs back-to-back from each
    // aggregate's start.
    let mut starts = vec![0usize; instance.n_jobs()];
    let mut level = 0usize;
    let mut runs: BlockList = Vec::new();
    for (k, members) in agg_jobs.iter().enumerate() {
        let start = intervals[level];
        let mut at = start;
        for &j in members {
            starts[j] = at;
            at += instance.jobs()[j];
        }
        runs.push(crate::bounds::Block {
            start,
            len: agg_lengths[k],
        });
        level += agg_lengths[k];
    }

    let schedule = crate::bnb::stitch_schedule(instance, table, &runs, starts)?;
    let tec = crate::model::validate(instance, &schedule)
        .map_err(Error::ReconstructionMismatch)?;
    Ok((tec, schedule))
}
