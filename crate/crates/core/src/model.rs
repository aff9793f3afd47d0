//! Domain types: transition diagrams, instances, schedules, feasibility
//! validation and TEC evaluation.
//!
//! Conventions used throughout the crate:
//! - intervals are 1-based, `1..=h`;
//! - a transition of duration `d` occupies `d` consecutive intervals, all
//!   labelled `(s, s')`; zero-duration transitions occupy no interval and
//!   never appear in a schedule's label vector;
//! - job indices are 0-based in code; display adds 1.

use crate::num::{CostScale, Rational};
use crate::{Error, Result};

/// Index of a state in a [`TransitionDiagram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A per-interval label: the transition `(s, s')` active in that interval.
pub type Label = (StateId, StateId);

/// Machine states plus the transition-time and transition-power matrices.
/// `None` entries mean the direct transition does not exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDiagram {
    states: Vec<String>,
    off: StateId,
    proc: StateId,
    trans_time: Vec<Option<u32>>,
    trans_power: Vec<Option<Rational>>,
}

impl TransitionDiagram {
    pub fn new(
        states: Vec<String>,
        off: &str,
        proc: &str,
        trans_time: Vec<Vec<Option<u32>>>,
        trans_power: Vec<Vec<Option<Rational>>>,
    ) -> Result<Self> {
        let ns = states.len();
        if ns < 2 {
            return Err(Error::InvalidInstance("need at least two states".into()));
        }
        let find = |name: &str| -> Result<StateId> {
            states
                .iter()
                .position(|s| s == name)
                .map(StateId)
                .ok_or_else(|| Error::InvalidInstance(format!("state '{name}' not in state list")))
        };
        let off_id = find(off)?;
        let proc_id = find(proc)?;
        if off_id == proc_id {
            return Err(Error::InvalidInstance("off and proc must be distinct states".into()));
        }
        if trans_time.len() != ns || trans_power.len() != ns {
            return Err(Error::InvalidInstance("transition matrices must be |S| x |S|".into()));
        }
        let mut time = Vec::with_capacity(ns * ns);
        let mut power = Vec::with_capacity(ns * ns);
        for (s, (trow, prow)) in trans_time.iter().zip(&trans_power).enumerate() {
            if trow.len() != ns || prow.len() != ns {
                return Err(Error::InvalidInstance("transition matrices must be |S| x |S|".into()));
            }
            for (sp, (t, p)) in trow.iter().zip(prow).enumerate() {
                if t.is_some() != p.is_some() {
                    return Err(Error::InvalidInstance(format!(
                        "transition ({}, {}) must have both time and power or neither",
                        states[s], states[sp]
                    )));
                }
                if s == sp && *t != Some(1) {
                    return Err(Error::InvalidInstance(format!(
                        "self transition ({0}, {0}) must have duration 1",
                        states[s]
                    )));
                }
                if let Some(p) = p {
                    if *p < Rational::from_integer(0) {
                        return Err(Error::InvalidInstance(format!(
                            "transition power ({}, {}) must be non-negative",
                            states[s], states[sp]
                        )));
                    }
                }
                time.push(*t);
                power.push(*p);
            }
        }
        Ok(TransitionDiagram {
            states,
            off: off_id,
            proc: proc_id,
            trans_time: time,
            trans_power: power,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn off(&self) -> StateId {
        self.off
    }

    pub fn proc(&self) -> StateId {
        self.proc
    }

    pub fn time(&self, from: StateId, to: StateId) -> Option<u32> {
        self.trans_time[from.0 * self.states.len() + to.0]
    }

    pub fn power(&self, from: StateId, to: StateId) -> Option<&Rational> {
        self.trans_power[from.0 * self.states.len() + to.0].as_ref()
    }

    pub(crate) fn power_matrix(&self) -> &[Option<Rational>] {
        &self.trans_power
    }

    /// `reach[s][s']` = true iff `s'` is reachable from `s` through
    /// zero-duration transitions (reflexively true for `s == s'`).
    pub(crate) fn zero_duration_closure(&self) -> Vec<bool> {
        let ns = self.states.len();
        let mut reach = vec![false; ns * ns];
        for s in 0..ns {
            reach[s * ns + s] = true;
        }
        // |S| rounds of relaxation suffice: zero-duration paths never need
        // more than |S| - 1 hops.
        for _ in 0..ns {
            for s in 0..ns {
                for m in 0..ns {
                    if !reach[s * ns + m] {
                        continue;
                    }
                    for t in 0..ns {
                        if self.trans_time[m * ns + t] == Some(0) {
                            reach[s * ns + t] = true;
                        }
                    }
                }
            }
        }
        reach
    }
}

/// A problem instance: per-interval energy costs, job processing times and
/// the machine's transition diagram. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    costs: Vec<Rational>,
    jobs: Vec<usize>,
    diagram: TransitionDiagram,
    scaled: CostScale,
}

impl Instance {
    pub fn new(costs: Vec<Rational>, jobs: Vec<usize>, diagram: TransitionDiagram) -> Result<Self> {
        if costs.len() < 2 {
            return Err(Error::InvalidInstance(
                "horizon must have at least 2 intervals (off boundaries)".into(),
            ));
        }
        if jobs.contains(&0) {
            return Err(Error::InvalidInstance("processing times must be >= 1".into()));
        }
        let scaled = CostScale::build(&costs, diagram.power_matrix())?;
        Ok(Instance {
            costs,
            jobs,
            diagram,
            scaled,
        })
    }

    /// Number of intervals in the horizon.
    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn cost(&self, interval: usize) -> &Rational {
        &self.costs[interval - 1]
    }

    /// Processing times, indexed by job.
    pub fn jobs(&self) -> &[usize] {
        &self.jobs
    }

    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn total_work(&self) -> usize {
        self.jobs.iter().sum()
    }

    pub fn diagram(&self) -> &TransitionDiagram {
        &self.diagram
    }

    pub(crate) fn scaled(&self) -> &CostScale {
        &self.scaled
    }

    pub(crate) fn scaled_power(&self, from: StateId, to: StateId) -> Option<i64> {
        self.scaled.powers[from.0 * self.diagram.n_states() + to.0]
    }
}

/// Earliest and latest interval in which the machine can be processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcessingWindow {
    pub first: usize,
    pub last: usize,
}

impl ProcessingWindow {
    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

/// Earliest/latest processing intervals, from reachability on the
/// interval-state graph: the first interval whose proc vertex is reachable
/// from the initial off vertex, and the last interval from which the final
/// off vertex can still be reached.
pub fn processing_window(instance: &Instance) -> Result<ProcessingWindow> {
    crate::switching::compute_window(instance)
}

/// A solution: job start intervals plus the per-interval transition labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub starts: Vec<usize>,
    pub transitions: Vec<Label>,
}

/// One violated feasibility condition, with the offending indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Condition 1: two jobs overlap in time.
    Overlap { job_a: usize, job_b: usize },
    /// Condition 2: a job interval is not labelled (proc, proc).
    NotProcessing { job: usize, interval: usize },
    /// Condition 3: first/last interval not (off, off).
    BoundaryNotOff { interval: usize },
    /// Condition 4: a label names a transition that does not exist.
    UnknownTransition { interval: usize },
    /// Condition 4: a non-self transition occupies the wrong number of intervals.
    WrongDuration { interval: usize, expected: u32, actual: usize },
    /// Condition 4: consecutive transitions do not chain (the target state of
    /// one cannot reach the source state of the next through zero-duration
    /// transitions).
    BrokenChain { interval: usize },
    /// A job starts outside the horizon or runs past it.
    StartOutOfRange { job: usize, start: usize },
    /// The label vector does not cover the horizon.
    WrongLength { expected: usize, actual: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Overlap { job_a, job_b } => {
                write!(f, "jobs J{} and J{} overlap", job_a + 1, job_b + 1)
            }
            Violation::NotProcessing { job, interval } => write!(
                f,
                "job J{} occupies interval {interval} but the machine is not processing there",
                job + 1
            ),
            Violation::BoundaryNotOff { interval } => {
                write!(f, "interval {interval} must be (off, off)")
            }
            Violation::UnknownTransition { interval } => {
                write!(f, "interval {interval} uses a transition that does not exist")
            }
            Violation::WrongDuration { interval, expected, actual } => write!(
                f,
                "transition starting at interval {interval} occupies {actual} intervals, expected {expected}"
            ),
            Violation::BrokenChain { interval } => {
                write!(f, "transitions do not chain at interval {interval}")
            }
            Violation::StartOutOfRange { job, start } => {
                write!(f, "job J{} start {start} leaves the horizon", job + 1)
            }
            Violation::WrongLength { expected, actual } => {
                write!(f, "expected {expected} interval labels, got {actual}")
            }
        }
    }
}

/// Total energy cost of a schedule: sum over intervals of
/// `cost_i * power(label_i)`. Pure; does not check feasibility beyond the
/// labels naming existing transitions.
pub fn tec(instance: &Instance, schedule: &Schedule) -> Result<Rational> {
    let h = instance.horizon();
    if schedule.transitions.len() != h {
        return Err(Error::InvalidInstance(format!(
            "schedule has {} labels for horizon {h}",
            schedule.transitions.len()
        )));
    }
    let d = instance.diagram();
    let mut total = Rational::from_integer(0);
    for (idx, (s, sp)) in schedule.transitions.iter().enumerate() {
        let power = d.power(*s, *sp).ok_or_else(|| Error::AbsentTransition {
            interval: idx + 1,
            from: d.state_name(*s).to_string(),
            to: d.state_name(*sp).to_string(),
        })?;
        total += instance.cost(idx + 1) * power;
    }
    Ok(total)
}

/// Checks the four feasibility conditions. Returns the TEC when feasible,
/// otherwise every violated condition found.
pub fn validate(instance: &Instance, schedule: &Schedule) -> std::result::Result<Rational, Vec<Violation>> {
    let mut violations = Vec::new();
    let h = instance.horizon();
    let d = instance.diagram();
    let (off, proc) = (d.off(), d.proc());

    if schedule.transitions.len() != h {
        return Err(vec![Violation::WrongLength {
            expected: h,
            actual: schedule.transitions.len(),
        }]);
    }

    // Condition 3: off at both boundaries.
    for boundary in [1, h] {
        if schedule.transitions[boundary - 1] != (off, off) {
            violations.push(Violation::BoundaryNotOff { interval: boundary });
        }
    }

    // Condition 4: labels decompose into transitions of the right duration,
    // chained through zero-duration transitions.
    let zero_reach = d.zero_duration_closure();
    let ns = d.n_states();
    let mut idx = 0;
    let mut prev_target: Option<StateId> = None;
    while idx < h {
        let (s, sp) = schedule.transitions[idx];
        if s.0 >= ns || sp.0 >= ns || d.time(s, sp).is_none() {
            violations.push(Violation::UnknownTransition { interval: idx + 1 });
            idx += 1;
            prev_target = None;
            continue;
        }
        if let Some(pt) = prev_target {
            if !zero_reach[pt.0 * ns + s.0] {
                violations.push(Violation::BrokenChain { interval: idx + 1 });
            }
        }
        if s == sp {
            // Self transitions have duration 1; a run of them is a run of
            // single-interval transitions.
            let mut end = idx;
            while end < h && schedule.transitions[end] == (s, sp) {
                end += 1;
            }
            prev_target = Some(sp);
            idx = end;
        } else {
            // Consume exactly one execution; a repeat of the same label is
            // then re-checked as a fresh transition (it chains only when
            // zero-duration hops lead from the target back to the source).
            let expected = d.time(s, sp).unwrap() as usize;
            let mut run = 0;
            while idx + run < h && run < expected && schedule.transitions[idx + run] == (s, sp) {
                run += 1;
            }
            if run != expected {
                violations.push(Violation::WrongDuration {
                    interval: idx + 1,
                    expected: expected as u32,
                    actual: run,
                });
            }
            prev_target = Some(sp);
            idx += run.max(1);
        }
    }

    // Conditions 1 and 2: jobs pairwise disjoint, processed in proc state.
    let mut spans: Vec<(usize, usize, usize)> = Vec::with_capacity(instance.n_jobs());
    for (j, (&start, &p)) in schedule.starts.iter().zip(instance.jobs()).enumerate() {
        if start == 0 || start + p - 1 > h {
            violations.push(Violation::StartOutOfRange { job: j, start });
            continue;
        }
        for i in start..start + p {
            if schedule.transitions[i - 1] != (proc, proc) {
                violations.push(Violation::NotProcessing { job: j, interval: i });
            }
        }
        spans.push((start, start + p - 1, j));
    }
    spans.sort_unstable();
    for w in spans.windows(2) {
        let (_, end_a, job_a) = w[0];
        let (start_b, _, job_b) = w[1];
        if start_b <= end_a {
            violations.push(Violation::Overlap {
                job_a: job_a.min(job_b),
                job_b: job_a.max(job_b),
            });
        }
    }

    if violations.is_empty() {
        Ok(tec(instance, schedule).expect("labels checked above"))
    } else {
        Err(violations)
    }
}
