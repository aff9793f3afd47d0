//! Optimal TEC for a fixed job sequence, and the incremental levels array
//! the search uses to evaluate relaxations.
//!
//! The job-interval graph is never materialized. Its DP runs over a
//! two-dimensional array whose rows ("levels") are the unit slices of work:
//! one row per interval of total processing time. A job of length `p` owns
//! `p` consecutive levels; its first level pays the optimal switching cost
//! from the previous level's interval, the rest are forced to the next
//! interval. Relaxed (un-fixed) work is evaluated the same way, grouped
//! into equal-length pieces.
//!
//! Fixing one more job in the search *joins* the next levels; backtracking
//! *splits* them again. Rows at or below the fixed frontier are final and
//! shared by the whole subtree; rows above it are scratch recomputed per
//! evaluation.

use crate::model::{processing_window, Instance, ProcessingWindow};
use crate::num::{is_finite, Rational, INF};
use crate::switching::SwitchingTable;
use crate::{Error, Result};

pub struct LevelsArray<'a> {
    instance: &'a Instance,
    table: &'a SwitchingTable,
    window: ProcessingWindow,
    job_lengths: Vec<usize>,
    fixed_jobs: Vec<bool>,
    total_levels: usize,
    width: usize,
    dp: Vec<i64>,
    /// Scaled processing cost per window column.
    pp: Vec<i64>,
    boundary_first: i64,
    boundary_last: i64,
    fixed_levels: usize,
    joins: Vec<(usize, usize)>,
}

impl<'a> LevelsArray<'a> {
    /// Builds an array for the given job lengths (usually
    /// `instance.jobs()`, but relaxations and aggregated jobs substitute
    /// their own). Errors when the processing window cannot host the total
    /// work.
    pub fn new(
        instance: &'a Instance,
        table: &'a SwitchingTable,
        job_lengths: Vec<usize>,
    ) -> Result<Self> {
        let window = processing_window(instance)?;
        let total_levels: usize = job_lengths.iter().sum();
        let width = window.len();
        if total_levels > width {
            return Err(Error::InfeasibleRelaxation);
        }
        let scaled = instance.scaled();
        let d = instance.diagram();
        let p_proc = instance.scaled_power(d.proc(), d.proc()).unwrap();
        let p_off = instance.scaled_power(d.off(), d.off()).unwrap();
        let h = instance.horizon();
        let pp = (0..width)
            .map(|c| scaled.span_cost(window.first + c, window.first + c + 1, p_proc))
            .collect();
        Ok(LevelsArray {
            instance,
            table,
            window,
            fixed_jobs: vec![false; job_lengths.len()],
            job_lengths,
            total_levels,
            width,
            dp: vec![INF; total_levels * width],
            pp,
            boundary_first: scaled.span_cost(1, 2, p_off),
            boundary_last: scaled.span_cost(h, h + 1, p_off),
            fixed_levels: 0,
            joins: Vec::new(),
        })
    }

    pub fn window(&self) -> ProcessingWindow {
        self.window
    }

    pub fn total_levels(&self) -> usize {
        self.total_levels
    }

    pub fn fixed_levels(&self) -> usize {
        self.fixed_levels
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub(crate) fn scale(&self) -> i64 {
        self.instance.scaled().scale
    }

    /// Valid column range (inclusive, 0-based) of a level: early enough to
    /// fit the levels before it, late enough to fit the ones after.
    fn level_cols(&self, level: usize) -> (usize, usize) {
        (level - 1, self.width - 1 - (self.total_levels - level))
    }

    fn idx(&self, level: usize, col: usize) -> usize {
        (level - 1) * self.width + col
    }

    fn compute_start_row(&mut self, level: usize) {
        let (lo, hi) = self.level_cols(level);
        let first = self.window.first;
        let width = self.width;
        let row_off = (level - 1) * width;
        if level == 1 {
            let base = self.boundary_first;
            for c in lo..=hi {
                let sig = self.table.row_for_target(first + c)[0];
                self.dp[row_off + c] = base + sig + self.pp[c];
            }
            return;
        }
        let (plo, phi) = self.level_cols(level - 1);
        let (head, tail) = self.dp.split_at_mut(row_off);
        let prev = &head[row_off - width..];
        let cur = &mut tail[..width];
        for c in lo..=hi {
            let trow = self.table.row_for_target(first + c);
            let mut best = INF;
            for cp in plo..=phi.min(c - 1) {
                let cand = prev[cp] + trow[first + cp - 1];
                if cand < best {
                    best = cand;
                }
            }
            cur[c] = best + self.pp[c];
        }
    }

    fn compute_cont_row(&mut self, level: usize) {
        let (lo, hi) = self.level_cols(level);
        let width = self.width;
        let row_off = (level - 1) * width;
        let (head, tail) = self.dp.split_at_mut(row_off);
        let prev = &head[row_off - width..];
        let cur = &mut tail[..width];
        for c in lo..=hi {
            cur[c] = prev[c - 1] + self.pp[c];
        }
    }

    /// Fixes a job: its levels are appended to the fixed frontier and their
    /// DP rows computed once for the whole subtree.
    pub fn join(&mut self, job: usize) -> Result<()> {
        if self.fixed_jobs[job] {
            return Err(Error::InvalidInstance(format!("job {job} already fixed")));
        }
        let p = self.job_lengths[job];
        if self.fixed_levels + p > self.total_levels {
            return Err(Error::InvalidInstance("no free levels left to join".into()));
        }
        self.fixed_jobs[job] = true;
        self.compute_start_row(self.fixed_levels + 1);
        for k in 2..=p {
            self.compute_cont_row(self.fixed_levels + k);
        }
        self.joins.push((job, p));
        self.fixed_levels += p;
        Ok(())
    }

    /// Reverses the most recent join (LIFO, mirroring DFS backtracking).
    pub fn split(&mut self) -> Result<()> {
        let (job, p) = self.joins.pop().ok_or(Error::EmptyJoinStack)?;
        self.fixed_jobs[job] = false;
        self.fixed_levels -= p;
        Ok(())
    }

    pub fn joined(&self) -> impl Iterator<Item = usize> + '_ {
        self.joins.iter().map(|(job, _)| *job)
    }

    /// Evaluates the array with the un-fixed levels grouped into pieces of
    /// `group` intervals. Returns the scaled optimum (INF-class when no
    /// feasible placement exists).
    pub(crate) fn evaluate_tail(&mut self, group: usize) -> i64 {
        let tail = self.total_levels - self.fixed_levels;
        debug_assert!(group >= 1 && tail.is_multiple_of(group));
        let mut level = self.fixed_levels + 1;
        while level <= self.total_levels {
            self.compute_start_row(level);
            for k in 1..group {
                self.compute_cont_row(level + k);
            }
            level += group;
        }
        self.sink_scan().0
    }

    /// Sink value and the earliest arg-min column of the last level.
    fn sink_scan(&self) -> (i64, usize) {
        let h = self.instance.horizon();
        if self.total_levels == 0 {
            let direct = self.table.row_for_target(h)[0];
            return (self.boundary_first + direct + self.boundary_last, 0);
        }
        let first = self.window.first;
        let end_row = self.table.row_for_target(h);
        let (lo, hi) = self.level_cols(self.total_levels);
        let row_off = self.idx(self.total_levels, 0);
        let mut best = INF;
        let mut best_col = lo;
        for c in lo..=hi {
            let cand = self.dp[row_off + c] + end_row[first + c - 1];
            if cand < best {
                best = cand;
                best_col = c;
            }
        }
        (best + self.boundary_last, best_col)
    }

    /// Recovers the interval of every level in the optimum just evaluated
    /// with the same grouping. Ties resolve to the earliest interval, at
    /// the sink and at every predecessor scan. `None` when infeasible.
    pub(crate) fn backtrack(&self, group: usize) -> Option<Vec<usize>> {
        let levels = self.total_levels;
        if levels == 0 {
            return Some(Vec::new());
        }
        let (value, last_col) = self.sink_scan();
        if !is_finite(value) {
            return None;
        }
        let is_start = |level: usize| -> bool {
            if level <= self.fixed_levels {
                let mut at = 1;
                for (_, p) in &self.joins {
                    if level == at {
                        return true;
                    }
                    if level < at + p {
                        return false;
                    }
                    at += p;
                }
                unreachable!("level below fixed frontier not covered by joins")
            } else {
                (level - self.fixed_levels - 1).is_multiple_of(group)
            }
        };
        let first = self.window.first;
        let mut cols = vec![0usize; levels + 1];
        cols[levels] = last_col;
        for level in (2..=levels).rev() {
            let c = cols[level];
            if is_start(level) {
                let (plo, phi) = self.level_cols(level - 1);
                let trow = self.table.row_for_target(first + c);
                let prev_off = self.idx(level - 1, 0);
                let mut best = INF;
                let mut best_cp = plo;
                for cp in plo..=phi.min(c - 1) {
                    let cand = self.dp[prev_off + cp] + trow[first + cp - 1];
                    if cand < best {
                        best = cand;
                        best_cp = cp;
                    }
                }
                debug_assert_eq!(best + self.pp[c], self.dp[self.idx(level, c)]);
                cols[level - 1] = best_cp;
            } else {
                cols[level - 1] = c - 1;
            }
        }
        Some(cols[1..].iter().map(|c| first + c).collect())
    }

    /// DP rows up to the fixed frontier, for the join/split restoration
    /// tests.
    #[cfg(test)]
    pub(crate) fn fixed_rows(&self) -> &[i64] {
        &self.dp[..self.fixed_levels * self.width]
    }
}

/// Minimum TEC over all schedules that process the jobs in the given order.
/// Returns the optimum and the start interval of every job (indexed by job,
/// not by position).
pub fn fixed_sequence_tec(
    instance: &Instance,
    table: &SwitchingTable,
    sequence: &[usize],
) -> Result<(Rational, Vec<usize>)> {
    let n = instance.n_jobs();
    if sequence.len() != n {
        return Err(Error::InvalidInstance("sequence must list every job once".into()));
    }
    let mut seen = vec![false; n];
    for &j in sequence {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidInstance("sequence is not a permutation".into()));
        }
    }

    let mut levels = LevelsArray::new(instance, table, instance.jobs().to_vec())
        .map_err(|_| Error::InfeasibleSequence)?;
    for &j in sequence {
        levels.join(j)?;
    }
    let value = levels.evaluate_tail(1);
    if !is_finite(value) {
        return Err(Error::InfeasibleSequence);
    }
    let intervals = levels.backtrack(1).ok_or(Error::InfeasibleSequence)?;
    let mut starts = vec![0usize; n];
    let mut level = 0usize;
    for &j in sequence {
        starts[j] = intervals[level];
        level += instance.jobs()[j];
    }
    Ok((levels.instance.scaled().to_rational(value), starts))
}
