//! JSON interchange formats for instances, schedules and generator specs.
//!
//! Rationals serialize as bare integers when integral and `"num/den"`
//! strings otherwise; `null` in the transition matrices means the
//! transition does not exist.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::instgen::{nosby, standby_demo, CostSource, GenSpec};
use crate::model::{Instance, Schedule, StateId, TransitionDiagram};
use crate::num::{rational_from_json, rational_to_json};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    horizon: usize,
    costs: Vec<serde_json::Value>,
    jobs: Vec<usize>,
    states: Vec<String>,
    off: String,
    proc: String,
    transition_time: Vec<Vec<Option<u32>>>,
    transition_power: Vec<Vec<Option<serde_json::Value>>>,
}

fn diagram_parts(d: &TransitionDiagram) -> (Vec<Vec<Option<u32>>>, Vec<Vec<Option<serde_json::Value>>>) {
    let ns = d.n_states();
    let mut time = Vec::with_capacity(ns);
    let mut power = Vec::with_capacity(ns);
    for s in 0..ns {
        let mut trow = Vec::with_capacity(ns);
        let mut prow = Vec::with_capacity(ns);
        for sp in 0..ns {
            trow.push(d.time(StateId(s), StateId(sp)));
            prow.push(d.power(StateId(s), StateId(sp)).map(rational_to_json));
        }
        time.push(trow);
        power.push(prow);
    }
    (time, power)
}

fn instance_repr(instance: &Instance) -> InstanceJson {
    let d = instance.diagram();
    let (time, power) = diagram_parts(d);
    InstanceJson {
        horizon: instance.horizon(),
        costs: instance.costs().iter().map(rational_to_json).collect(),
        jobs: instance.jobs().to_vec(),
        states: d.states().to_vec(),
        off: d.state_name(d.off()).to_string(),
        proc: d.state_name(d.proc()).to_string(),
        transition_time: time,
        transition_power: power,
    }
}

pub fn instance_to_json(instance: &Instance) -> serde_json::Value {
    serde_json::to_value(instance_repr(instance)).expect("plain data serializes")
}

/// Canonical pretty serialization with stable field order.
pub fn instance_to_string(instance: &Instance) -> String {
    serde_json::to_string_pretty(&instance_repr(instance)).expect("plain data serializes")
}

fn diagram_from_parts(
    states: Vec<String>,
    off: &str,
    proc: &str,
    time: Vec<Vec<Option<u32>>>,
    power_json: Vec<Vec<Option<serde_json::Value>>>,
) -> Result<TransitionDiagram> {
    let mut power = Vec::with_capacity(power_json.len());
    for row in power_json {
        let mut prow = Vec::with_capacity(row.len());
        for cell in row {
            prow.push(cell.as_ref().map(rational_from_json).transpose()?);
        }
        power.push(prow);
    }
    TransitionDiagram::new(states, off, proc, time, power)
}

pub fn instance_from_json(value: &serde_json::Value) -> Result<Instance> {
    let parsed: InstanceJson = serde_json::from_value(value.clone()).map_err(|e| Error::Parse {
        location: "instance".into(),
        message: e.to_string(),
    })?;
    if parsed.costs.len() != parsed.horizon {
        return Err(Error::Parse {
            location: "instance.horizon".into(),
            message: format!(
                "horizon is {} but costs has {} entries",
                parsed.horizon,
                parsed.costs.len()
            ),
        });
    }
    let costs = parsed
        .costs
        .iter()
        .map(rational_from_json)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("instance.costs {location}"),
                message,
            },
            other => other,
        })?;
    let diagram = diagram_from_parts(
        parsed.states,
        &parsed.off,
        &parsed.proc,
        parsed.transition_time,
        parsed.transition_power,
    )?;
    Instance::new(costs, parsed.jobs, diagram)
}

pub fn instance_from_str(text: &str) -> Result<Instance> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("instance JSON line {}", e.line()),
        message: e.to_string(),
    })?;
    instance_from_json(&value)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    instance_from_str(&text)
}

#[derive(Serialize, Deserialize)]
struct ScheduleJson {
    starts: Vec<usize>,
    omega: Vec<(String, String)>,
    tec: serde_json::Value,
}

fn schedule_repr(instance: &Instance, schedule: &Schedule) -> Result<ScheduleJson> {
    let tec = crate::model::tec(instance, schedule)?;
    let d = instance.diagram();
    Ok(ScheduleJson {
        starts: schedule.starts.clone(),
        omega: schedule
            .transitions
            .iter()
            .map(|(s, sp)| (d.state_name(*s).to_string(), d.state_name(*sp).to_string()))
            .collect(),
        tec: rational_to_json(&tec),
    })
}

pub fn schedule_to_json(instance: &Instance, schedule: &Schedule) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(schedule_repr(instance, schedule)?).expect("plain data serializes"))
}

pub fn schedule_to_string(instance: &Instance, schedule: &Schedule) -> Result<String> {
    Ok(serde_json::to_string_pretty(&schedule_repr(instance, schedule)?)
        .expect("plain data serializes"))
}

pub fn schedule_from_json(instance: &Instance, value: &serde_json::Value) -> Result<Schedule> {
    let parsed: ScheduleJson = serde_json::from_value(value.clone()).map_err(|e| Error::Parse {
        location: "schedule".into(),
        message: e.to_string(),
    })?;
    let d = instance.diagram();
    let mut transitions = Vec::with_capacity(parsed.omega.len());
    for (idx, (s, sp)) in parsed.omega.iter().enumerate() {
        let from = d.state_by_name(s).ok_or_else(|| Error::Parse {
            location: format!("schedule.omega[{idx}]"),
            message: format!("unknown state '{s}'"),
        })?;
        let to = d.state_by_name(sp).ok_or_else(|| Error::Parse {
            location: format!("schedule.omega[{idx}]"),
            message: format!("unknown state '{sp}'"),
        })?;
        transitions.push((from, to));
    }
    Ok(Schedule {
        starts: parsed.starts,
        transitions,
    })
}

pub fn schedule_from_str(instance: &Instance, text: &str) -> Result<Schedule> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("schedule JSON line {}", e.line()),
        message: e.to_string(),
    })?;
    schedule_from_json(instance, &value)
}

#[derive(Serialize, Deserialize)]
struct GenSpecJson {
    #[serde(default)]
    name: Option<String>,
    n: usize,
    proc_time_set: Vec<usize>,
    lambda: serde_json::Value,
    cost: CostJson,
    /// "nosby", "standby-demo", or an inline diagram object.
    diagram: serde_json::Value,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
enum CostJson {
    #[serde(rename = "uniform")]
    Uniform { lo: i64, hi: i64 },
    #[serde(rename = "profile")]
    Profile {
        path: String,
        #[serde(default)]
        offset: usize,
        #[serde(default = "default_true")]
        repeat: bool,
    },
}

fn default_true() -> bool {
    true
}

pub fn diagram_from_json(value: &serde_json::Value) -> Result<TransitionDiagram> {
    if let Some(name) = value.as_str() {
        return match name {
            "nosby" => Ok(nosby()),
            "standby-demo" => Ok(standby_demo()),
            other => Err(Error::Parse {
                location: "diagram".into(),
                message: format!("unknown built-in diagram '{other}'"),
            }),
        };
    }
    #[derive(Deserialize)]
    struct DiagramJson {
        states: Vec<String>,
        off: String,
        proc: String,
        transition_time: Vec<Vec<Option<u32>>>,
        transition_power: Vec<Vec<Option<serde_json::Value>>>,
    }
    let parsed: DiagramJson = serde_json::from_value(value.clone()).map_err(|e| Error::Parse {
        location: "diagram".into(),
        message: e.to_string(),
    })?;
    diagram_from_parts(
        parsed.states,
        &parsed.off,
        &parsed.proc,
        parsed.transition_time,
        parsed.transition_power,
    )
}

/// A parsed generator spec file: one [`GenSpec`] per listed seed (a single
/// `seed` field is the one-seed shorthand). Profile paths resolve
/// relative to `base_dir`.
pub struct GenSpecFile {
    pub name: String,
    pub specs: Vec<GenSpec>,
}

pub fn genspec_from_str(text: &str, base_dir: &Path) -> Result<GenSpecFile> {
    let parsed: GenSpecJson = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: "genspec".into(),
        message: e.to_string(),
    })?;
    let lambda = rational_from_json(&parsed.lambda)?;
    let diagram = diagram_from_json(&parsed.diagram)?;
    let cost_source = match &parsed.cost {
        CostJson::Uniform { lo, hi } => CostSource::UniformInt { lo: *lo, hi: *hi },
        CostJson::Profile {
            path,
            offset,
            repeat,
        } => {
            let resolved = base_dir.join(path);
            let costs = crate::instgen::ingest_prices(&resolved, "idx", "cost")?;
            CostSource::Profile {
                costs,
                offset: *offset,
                repeat: *repeat,
            }
        }
    };
    let mut seeds = parsed.seeds.clone();
    if let Some(s) = parsed.seed {
        seeds.push(s);
    }
    if seeds.is_empty() {
        return Err(Error::Parse {
            location: "genspec.seeds".into(),
            message: "need at least one seed".into(),
        });
    }
    let specs = seeds
        .into_iter()
        .map(|seed| GenSpec {
            n: parsed.n,
            proc_time_set: parsed.proc_time_set.clone(),
            cost_source: cost_source.clone(),
            lambda,
            seed,
            diagram: diagram.clone(),
        })
        .collect();
    Ok(GenSpecFile {
        name: parsed.name.unwrap_or_else(|| "spec".into()),
        specs,
    })
}

pub fn read_genspec(path: &Path) -> Result<GenSpecFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut file = genspec_from_str(&text, base)?;
    if file.name == "spec" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            file.name = stem.to_string();
        }
    }
    Ok(file)
}
