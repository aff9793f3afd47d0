//! Benchmark instance generation and price-profile ingestion.
//!
//! Instances follow the usual protocol: processing times drawn uniformly
//! from a given set, horizon `ceil(lambda * (turn-on + total work +
//! turn-off))`, and costs either uniform integers or a window of a real
//! price profile. Generation is reproducible bit-for-bit: a ChaCha8 stream
//! keyed by the seed, stream 1 for processing times, stream 2 for costs,
//! with rejection-sampled indices (no platform-dependent shortcuts).

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, TransitionDiagram};
use crate::num::{parse_rational, Rational};
use crate::{Error, Result};

/// The three-state benchmark diagram without a standby mode: off, idle and
/// proc, with a 2-interval turn-on and free zero-duration proc/idle hops.
pub fn nosby() -> TransitionDiagram {
    let t = |v: u32| Some(v);
    let p = |v: i64| Some(Rational::from_integer(v));
    TransitionDiagram::new(
        vec!["off".into(), "idle".into(), "proc".into()],
        "off",
        "proc",
        vec![
            vec![t(1), None, t(2)],
            vec![None, t(1), t(0)],
            vec![t(1), t(0), t(1)],
        ],
        vec![
            vec![p(0), None, p(5)],
            vec![None, p(2), p(0)],
            vec![p(1), p(0), p(4)],
        ],
    )
    .expect("built-in diagram is valid")
}

/// An illustrative five-state diagram with two standby depths. The values
/// are made up for demonstrations and tests of larger state spaces; real
/// machines should supply their own diagram via JSON.
pub fn standby_demo() -> TransitionDiagram {
    let t = |v: u32| Some(v);
    let p = |v: i64| Some(Rational::from_integer(v));
    // Order: off, hibernate, standby, idle, proc.
    TransitionDiagram::new(
        vec![
            "off".into(),
            "hibernate".into(),
            "standby".into(),
            "idle".into(),
            "proc".into(),
        ],
        "off",
        "proc",
        vec![
            vec![t(1), t(1), t(2), None, t(4)],
            vec![t(1), t(1), t(1), None, t(3)],
            vec![t(1), t(1), t(1), None, t(1)],
            vec![None, None, t(1), t(1), t(0)],
            vec![t(1), t(1), t(1), t(0), t(1)],
        ],
        vec![
            vec![p(0), p(1), p(3), None, p(9)],
            vec![p(0), p(1), p(2), None, p(7)],
            vec![p(1), p(1), p(2), None, p(4)],
            vec![None, None, p(1), p(3), p(0)],
            vec![p(1), p(1), p(1), p(0), p(5)],
        ],
    )
    .expect("built-in diagram is valid")
}

/// Where interval costs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSource {
    /// Integers drawn uniformly from `lo..=hi`.
    UniformInt { lo: i64, hi: i64 },
    /// A window of an ingested price vector starting at `offset`
    /// (0-based). With `repeat` the profile tiles periodically; without it
    /// the window must fit.
    Profile {
        costs: Vec<Rational>,
        offset: usize,
        repeat: bool,
    },
}

/// Parameters for one generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub proc_time_set: Vec<usize>,
    pub cost_source: CostSource,
    pub lambda: Rational,
    pub seed: u64,
    pub diagram: TransitionDiagram,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform index in `0..k` by rejection sampling, stable across platforms.
fn uniform_index(rng: &mut ChaCha8Rng, k: u64) -> u64 {
    debug_assert!(k > 0);
    let zone = (u64::MAX / k) * k;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % k;
        }
    }
}

/// Generates an instance from a spec. Deterministic given the seed.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    if spec.n == 0 {
        return Err(Error::InvalidInstance("need at least one job".into()));
    }
    if spec.proc_time_set.is_empty() || spec.proc_time_set.contains(&0) {
        return Err(Error::InvalidInstance(
            "processing-time set must be non-empty with positive members".into(),
        ));
    }
    if spec.lambda < Rational::from_integer(1) {
        return Err(Error::InvalidInstance("lambda must be at least 1".into()));
    }
    let d = &spec.diagram;
    let t_on = d.time(d.off(), d.proc()).ok_or_else(|| {
        Error::InvalidInstance("diagram needs a direct off -> proc transition".into())
    })?;
    let t_off = d.time(d.proc(), d.off()).ok_or_else(|| {
        Error::InvalidInstance("diagram needs a direct proc -> off transition".into())
    })?;

    let mut p_rng = stream(spec.seed, 1);
    let jobs: Vec<usize> = (0..spec.n)
        .map(|_| spec.proc_time_set[uniform_index(&mut p_rng, spec.proc_time_set.len() as u64) as usize])
        .collect();

    let work: usize = jobs.iter().sum();
    let base = Rational::from_integer((t_on as i64) + (work as i64) + (t_off as i64));
    let h = (spec.lambda * base).ceil().to_integer() as usize;

    let costs: Vec<Rational> = match &spec.cost_source {
        CostSource::UniformInt { lo, hi } => {
            if lo > hi {
                return Err(Error::InvalidInstance("uniform cost range is empty".into()));
            }
            let mut c_rng = stream(spec.seed, 2);
            let width = (hi - lo + 1) as u64;
            (0..h)
                .map(|_| Rational::from_integer(lo + uniform_index(&mut c_rng, width) as i64))
                .collect()
        }
        CostSource::Profile {
            costs,
            offset,
            repeat,
        } => {
            if costs.is_empty() {
                return Err(Error::ProfileTooShort {
                    needed: h,
                    available: 0,
                });
            }
            if !repeat && offset + h > costs.len() {
                return Err(Error::ProfileTooShort {
                    needed: offset + h,
                    available: costs.len(),
                });
            }
            (0..h).map(|i| costs[(offset + i) % costs.len()]).collect()
        }
    };

    Instance::new(costs, jobs, d.clone())
}

/// Parses a price CSV with an index column and a cost column (header names
/// configurable). Negative prices are accepted.
pub fn ingest_prices(path: &Path, idx_col: &str, cost_col: &str) -> Result<Vec<Rational>> {
    let here = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        location: here.clone(),
        message: e.to_string(),
    })?;
    let headers = reader.headers().map_err(|e| Error::Parse {
        location: here.clone(),
        message: e.to_string(),
    })?;
    let cost_idx = headers
        .iter()
        .position(|f| f == cost_col)
        .ok_or_else(|| Error::Parse {
            location: here.clone(),
            message: format!("missing column '{cost_col}'"),
        })?;
    if !headers.iter().any(|f| f == idx_col) {
        return Err(Error::Parse {
            location: here,
            message: format!("missing column '{idx_col}'"),
        });
    }
    let mut costs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            location: format!("{here}:{}", row + 2),
            message: e.to_string(),
        })?;
        let field = record.get(cost_idx).ok_or_else(|| Error::Parse {
            location: format!("{here}:{}", row + 2),
            message: "row too short".into(),
        })?;
        let value = parse_rational(field).map_err(|_| Error::Parse {
            location: format!("{here}:{}", row + 2),
            message: format!("bad cost value '{field}'"),
        })?;
        costs.push(value);
    }
    Ok(costs)
}

/// Quick sanity bound used by tests: generated horizons always fit the
/// work plus both direct transitions.
pub fn min_horizon(diagram: &TransitionDiagram, total_work: usize) -> Option<usize> {
    let t_on = diagram.time(diagram.off(), diagram.proc())? as usize;
    let t_off = diagram.time(diagram.proc(), diagram.off())? as usize;
    Some(t_on + total_work + t_off)
}
