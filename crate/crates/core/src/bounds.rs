//! Lower bounds for partial job sequences.
//!
//! With a prefix of the sequence fixed, the un-fixed jobs are relaxed into
//! interchangeable equal-length pieces: unit pieces, or pieces of the gcd
//! of the remaining processing times (a strictly tighter relaxation when
//! the gcd exceeds one). Because the pieces are interchangeable, one
//! evaluation of the levels array yields the relaxed optimum, which bounds
//! every completion of the prefix from below.
//!
//! The relaxed optimum's processing intervals decompose into maximal runs
//! ("blocks"); those are the bins the packing heuristics work with.

use num_integer::Integer;

use crate::model::Instance;
use crate::num::{is_finite, Rational};
use crate::seqtec::LevelsArray;
use crate::{Error, Result};

/// A partial sequence: the fixed prefix plus the un-fixed rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSequence {
    /// Job indices in sequence order.
    pub fixed: Vec<usize>,
    /// Un-fixed job indices, ascending.
    pub remaining: Vec<usize>,
}

impl PartialSequence {
    pub fn new(n_jobs: usize, fixed: &[usize]) -> Result<Self> {
        let mut seen = vec![false; n_jobs];
        for &j in fixed {
            if j >= n_jobs || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidInstance("fixed prefix is not duplicate-free".into()));
            }
        }
        let remaining = (0..n_jobs).filter(|j| !seen[*j]).collect();
        Ok(PartialSequence {
            fixed: fixed.to_vec(),
            remaining,
        })
    }

    pub fn remaining_times(&self, instance: &Instance) -> Vec<usize> {
        self.remaining.iter().map(|&j| instance.jobs()[j]).collect()
    }
}

/// Gcd of the un-fixed processing times; leaves have no remaining jobs and
/// report [`GcdValue::Empty`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcdValue {
    Empty,
    Of(usize),
}

impl GcdValue {
    pub fn group_length(self) -> usize {
        match self {
            GcdValue::Empty => 1,
            GcdValue::Of(g) => g,
        }
    }
}

pub fn gcd_of_remaining(instance: &Instance, partial: &PartialSequence) -> GcdValue {
    let mut g = 0usize;
    for &j in &partial.remaining {
        g = g.gcd(&instance.jobs()[j]);
    }
    if g == 0 {
        GcdValue::Empty
    } else {
        GcdValue::Of(g)
    }
}

/// Which relaxation to use for the un-fixed jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Unit pieces (gcd mode with group length 1).
    Unit,
    /// Pieces of the gcd of the remaining processing times.
    Gcd,
}

/// A maximal run of processing intervals in a relaxed solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub len: usize,
}

pub type BlockList = Vec<Block>;

/// Result of a lower-bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub lb: Rational,
    pub(crate) lb_scaled: i64,
    /// Maximal processing runs of the relaxed optimum (fixed prefix
    /// included); lengths sum to the total processing time.
    pub blocks: BlockList,
    /// Per block, the intervals *not* taken by the fixed prefix: the
    /// capacity available to the un-fixed jobs.
    pub free: Vec<usize>,
    /// Relaxation group length actually used.
    pub group: GcdValue,
    /// Interval occupied by each level of the relaxed optimum, ascending.
    pub(crate) level_intervals: Vec<usize>,
}

/// Evaluates the relaxation of a partial sequence on a levels array whose
/// joins must mirror `partial.fixed`.
pub fn lower_bound(
    partial: &PartialSequence,
    levels: &mut LevelsArray,
    mode: BoundMode,
) -> Result<LowerBound> {
    debug_assert!(levels.joined().eq(partial.fixed.iter().copied()));
    let instance = levels.instance();
    let gcd = match mode {
        BoundMode::Unit => match gcd_of_remaining(instance, partial) {
            GcdValue::Empty => GcdValue::Empty,
            GcdValue::Of(_) => GcdValue::Of(1),
        },
        BoundMode::Gcd => gcd_of_remaining(instance, partial),
    };
    let value = levels.evaluate_tail(gcd.group_length());
    if !is_finite(value) {
        return Err(Error::InfeasibleRelaxation);
    }
    let level_intervals = levels
        .backtrack(gcd.group_length())
        .expect("finite optimum has a witness");

    let mut blocks: BlockList = Vec::new();
    for &t in &level_intervals {
        match blocks.last_mut() {
            Some(b) if b.start + b.len == t => b.len += 1,
            _ => blocks.push(Block { start: t, len: 1 }),
        }
    }

    // The fixed prefix occupies the leading processing intervals (sequence
    // order is schedule order), so it fills blocks from the left.
    let mut fixed_left = levels.fixed_levels();
    let free = blocks
        .iter()
        .map(|b| {
            let used = fixed_left.min(b.len);
            fixed_left -= used;
            b.len - used
        })
        .collect();

    Ok(LowerBound {
        lb: Rational::new(value, levels.scale()),
        lb_scaled: value,
        blocks,
        free,
        group: gcd,
        level_intervals,
    })
}
