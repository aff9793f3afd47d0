//! Python bindings: instances, schedules, the exact solver and the
//! supporting operations (validation, fixed-sequence evaluation, optimal
//! switching costs, instance generation).
//!
//! Money values cross the boundary as exact strings (`"342"`, `"7/2"`)
//! with `*_float` conveniences where approximation is acceptable.

// The pymethods macro expands PyResult returns through a conversion that
// clippy flags as useless.
#![allow(clippy::useless_conversion)]

use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tousched_core::instgen::{self, CostSource, GenSpec};
use tousched_core::num::{parse_rational, rational_to_json, Rational};
use tousched_core::{bnb, io, model, packing, seqtec, switching};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn rational_str(r: &Rational) -> String {
    match rational_to_json(r) {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s,
        _ => unreachable!(),
    }
}

fn rational_f64(r: &Rational) -> f64 {
    (*r.numer() as f64) / (*r.denom() as f64)
}

/// A scheduling instance: interval costs, job processing times and the
/// machine's transition diagram.
#[pyclass(name = "Instance")]
#[derive(Clone)]
struct PyInstance {
    inner: model::Instance,
}

#[pymethods]
impl PyInstance {
    /// Parses the canonical instance JSON.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: io::instance_from_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::instance_to_string(&self.inner)
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn jobs(&self) -> Vec<usize> {
        self.inner.jobs().to_vec()
    }

    #[getter]
    fn costs(&self) -> Vec<String> {
        self.inner.costs().iter().map(rational_str).collect()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.diagram().states().to_vec()
    }

    fn processing_window(&self) -> PyResult<(usize, usize)> {
        let w = model::processing_window(&self.inner).map_err(err)?;
        Ok((w.first, w.last))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(h={}, n={}, states={})",
            self.inner.horizon(),
            self.inner.n_jobs(),
            self.inner.diagram().n_states()
        )
    }
}

/// A solution: job start intervals plus per-interval transition labels.
#[pyclass(name = "Schedule")]
#[derive(Clone)]
struct PySchedule {
    inner: model::Schedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn from_json(instance: &PyInstance, text: &str) -> PyResult<Self> {
        Ok(PySchedule {
            inner: io::schedule_from_str(&instance.inner, text).map_err(err)?,
        })
    }

    fn to_json(&self, instance: &PyInstance) -> PyResult<String> {
        io::schedule_to_string(&instance.inner, &self.inner).map_err(err)
    }

    #[getter]
    fn starts(&self) -> Vec<usize> {
        self.inner.starts.clone()
    }

    /// Per-interval labels as (from_state, to_state) name pairs; requires
    /// the instance for the state names.
    fn omega(&self, instance: &PyInstance) -> Vec<(String, String)> {
        let d = instance.inner.diagram();
        self.inner
            .transitions
            .iter()
            .map(|(s, sp)| (d.state_name(*s).to_string(), d.state_name(*sp).to_string()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Schedule(starts={:?})", self.inner.starts)
    }
}

/// Outcome of a solve call.
#[pyclass(name = "SolveResult")]
struct PySolveResult {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    tec: Option<String>,
    #[pyo3(get)]
    lb: Option<String>,
    #[pyo3(get)]
    nodes: u64,
    #[pyo3(get)]
    time_ms: u64,
    #[pyo3(get)]
    schedule: Option<PySchedule>,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn tec_float(&self) -> Option<f64> {
        self.tec
            .as_ref()
            .and_then(|s| parse_rational(s).ok())
            .map(|r| rational_f64(&r))
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={}, tec={:?}, nodes={})",
            self.status, self.tec, self.nodes
        )
    }
}

/// Solves an instance with the branch-and-bound search.
#[pyfunction]
#[pyo3(signature = (instance, time_limit_ms=None, node_limit=None, use_gcd=true, use_primal_packing=true, use_initial_heuristic=true))]
fn solve(
    instance: &PyInstance,
    time_limit_ms: Option<u64>,
    node_limit: Option<u64>,
    use_gcd: bool,
    use_primal_packing: bool,
    use_initial_heuristic: bool,
) -> PySolveResult {
    let config = bnb::SearchConfig {
        use_gcd,
        use_primal_packing,
        use_initial_heuristic,
        time_limit: time_limit_ms.map(Duration::from_millis),
        node_limit,
        ..bnb::SearchConfig::default()
    };
    let r = bnb::solve(&instance.inner, &config);
    PySolveResult {
        status: match r.status {
            bnb::SolveStatus::Optimal => "Optimal",
            bnb::SolveStatus::Feasible => "Feasible",
            bnb::SolveStatus::Infeasible => "Infeasible",
            bnb::SolveStatus::TimedOut => "TimedOut",
        }
        .to_string(),
        tec: r.ub.as_ref().map(rational_str),
        lb: r.lb.as_ref().map(rational_str),
        nodes: r.nodes,
        time_ms: r.wall_time.as_millis() as u64,
        schedule: r.schedule.map(|inner| PySchedule { inner }),
    }
}

/// Checks the feasibility conditions; returns a dict with `ok`, `tec`
/// (exact string) and `violations` (list of human-readable strings).
#[pyfunction]
fn validate<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    schedule: &PySchedule,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new_bound(py);
    match model::validate(&instance.inner, &schedule.inner) {
        Ok(tec) => {
            out.set_item("ok", true)?;
            out.set_item("tec", rational_str(&tec))?;
            out.set_item("violations", Vec::<String>::new())?;
        }
        Err(violations) => {
            out.set_item("ok", false)?;
            out.set_item("tec", py.None())?;
            out.set_item(
                "violations",
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            )?;
        }
    }
    Ok(out)
}

/// Total energy cost of a schedule (no feasibility checks).
#[pyfunction]
fn tec(instance: &PyInstance, schedule: &PySchedule) -> PyResult<String> {
    model::tec(&instance.inner, &schedule.inner)
        .map(|r| rational_str(&r))
        .map_err(err)
}

/// Optimal TEC over schedules processing the jobs in the given order.
/// Returns (tec, starts).
#[pyfunction]
fn fixed_sequence_tec(instance: &PyInstance, sequence: Vec<usize>) -> PyResult<(String, Vec<usize>)> {
    let table = switching::spaces(&instance.inner);
    let (tec, starts) =
        seqtec::fixed_sequence_tec(&instance.inner, &table, &sequence).map_err(err)?;
    Ok((rational_str(&tec), starts))
}

/// Precomputed optimal switching costs between anchor intervals.
#[pyclass(name = "SwitchingTable")]
struct PySwitchingTable {
    instance: model::Instance,
    table: switching::SwitchingTable,
}

#[pymethods]
impl PySwitchingTable {
    /// Optimal switching cost between anchors, or None when undefined.
    fn cost(&self, i: usize, ip: usize) -> Option<String> {
        self.table.cost(i, ip).map(|r| rational_str(&r))
    }

    /// The optimal behavior as per-interval (from, to) state-name pairs.
    fn behavior(&self, i: usize, ip: usize) -> Option<Vec<(String, String)>> {
        let d = self.instance.diagram();
        self.table.behavior(&self.instance, i, ip).map(|labels| {
            labels
                .iter()
                .map(|(s, sp)| (d.state_name(*s).to_string(), d.state_name(*sp).to_string()))
                .collect()
        })
    }
}

/// Runs the switching-cost preprocessing for an instance.
#[pyfunction]
fn switching_table(instance: &PyInstance) -> PySwitchingTable {
    PySwitchingTable {
        instance: instance.inner.clone(),
        table: switching::spaces(&instance.inner),
    }
}

/// Decides whether jobs (processing times) fit into blocks of the given
/// capacities. Returns "feasible", "infeasible" or "unknown".
#[pyfunction]
#[pyo3(signature = (capacities, jobs, budget_ms=200))]
fn bin_pack(capacities: Vec<usize>, jobs: Vec<usize>, budget_ms: u64) -> String {
    let jobs: Vec<(usize, usize)> = jobs.into_iter().enumerate().collect();
    match packing::bin_pack(&capacities, &jobs, Duration::from_millis(budget_ms)) {
        packing::PackOutcome::Feasible(_) => "feasible".into(),
        packing::PackOutcome::Infeasible => "infeasible".into(),
        packing::PackOutcome::Unknown => "unknown".into(),
    }
}

/// Generates a benchmark instance (uniform integer costs).
#[pyfunction]
#[pyo3(signature = (n, proc_time_set, seed, lambda_="13/10", cost_lo=1, cost_hi=10, diagram="nosby"))]
fn generate(
    n: usize,
    proc_time_set: Vec<usize>,
    seed: u64,
    lambda_: &str,
    cost_lo: i64,
    cost_hi: i64,
    diagram: &str,
) -> PyResult<PyInstance> {
    let diagram = match diagram {
        "nosby" => instgen::nosby(),
        "standby-demo" => instgen::standby_demo(),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown diagram '{other}' (use 'nosby' or 'standby-demo')"
            )))
        }
    };
    let spec = GenSpec {
        n,
        proc_time_set,
        cost_source: CostSource::UniformInt {
            lo: cost_lo,
            hi: cost_hi,
        },
        lambda: parse_rational(lambda_).map_err(err)?,
        seed,
        diagram,
    };
    Ok(PyInstance {
        inner: instgen::generate(&spec).map_err(err)?,
    })
}

#[pymodule]
fn tousched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PySwitchingTable>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(tec, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_sequence_tec, m)?)?;
    m.add_function(wrap_pyfunction!(switching_table, m)?)?;
    m.add_function(wrap_pyfunction!(bin_pack, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
