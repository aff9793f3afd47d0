//! Command-line front end for the energy-cost scheduling solver.
//!
//! Exit codes for `solve`: 0 optimal or feasible, 2 infeasible, 3 timed
//! out, 1 on I/O or parse failures. `validate` exits 2 when the schedule
//! violates a feasibility condition.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use tousched_core::instgen::{self, CostSource, GenSpec};
use tousched_core::num::{parse_rational, rational_to_json, Rational};
use tousched_core::{io, model, solve_with_progress, SearchConfig, SolveResult, SolveStatus};

#[derive(Parser)]
#[command(name = "tousched", version, about = "Single-machine scheduling under time-of-use energy tariffs with machine states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to proven optimality.
    Solve(SolveArgs),
    /// Check a schedule against an instance and report its cost.
    Validate(ValidateArgs),
    /// Generate a benchmark instance.
    Generate(GenerateArgs),
    /// Generate and solve a batch of instances, writing a CSV of results.
    Bench(BenchArgs),
    /// Solve an instance over a grid of turn-on/turn-off powers.
    Sweep(SweepArgs),
    /// Dump the precomputed switching costs (and optionally one behavior).
    Switching(SwitchingArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Wall-clock limit, e.g. `60s`, `500ms`.
    #[arg(long, value_parser = parse_duration)]
    time_limit: Option<Duration>,
    /// Stop after this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Disable the gcd tightening of the lower bound.
    #[arg(long)]
    no_gcd: bool,
    /// Disable the in-search packing heuristic.
    #[arg(long)]
    no_primal_pack: bool,
    /// Disable the initial incumbent heuristic.
    #[arg(long)]
    no_init: bool,
    /// Budget per in-search packing call.
    #[arg(long, value_parser = parse_duration, default_value = "50ms")]
    pack_budget: Duration,
}

impl SolverFlags {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            use_gcd: !self.no_gcd,
            use_primal_packing: !self.no_primal_pack,
            use_initial_heuristic: !self.no_init,
            pack_budget: self.pack_budget,
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            ..SearchConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long, short = 'i')]
    instance: PathBuf,
    /// Write the schedule JSON here.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Print per-node progress to stderr.
    #[arg(long, short = 'v')]
    verbose: bool,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, short = 'i')]
    instance: PathBuf,
    #[arg(long, short = 's')]
    schedule: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec JSON (overrides the individual flags).
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Allowed processing times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pset: Vec<usize>,
    /// Horizon scaling factor (rational, >= 1).
    #[arg(long, default_value = "13/10")]
    lambda: String,
    #[arg(long, default_value_t = 1)]
    cost_lo: i64,
    #[arg(long, default_value_t = 10)]
    cost_hi: i64,
    /// Price profile CSV (`idx,cost`); replaces the uniform costs.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    offset: usize,
    /// Fail instead of tiling the profile when it is shorter than the horizon.
    #[arg(long)]
    no_repeat: bool,
    /// Built-in diagram name (`nosby`, `standby-demo`) or a JSON file.
    #[arg(long, default_value = "nosby")]
    diagram: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Generator spec JSON file, or a directory of them.
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long, short = 'o')]
    out: PathBuf,
    /// Parallel solves (rows stay ordered by instance id).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Template instance JSON.
    #[arg(long, short = 'i')]
    instance: PathBuf,
    /// Turn-on power range.
    #[arg(long, default_value = "0")]
    on_from: String,
    #[arg(long, default_value = "10")]
    on_to: String,
    #[arg(long, default_value_t = 20)]
    on_steps: usize,
    /// Turn-off power range.
    #[arg(long, default_value = "0")]
    off_from: String,
    #[arg(long, default_value = "10")]
    off_to: String,
    #[arg(long, default_value_t = 20)]
    off_steps: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct SwitchingArgs {
    #[arg(long, short = 'i')]
    instance: PathBuf,
    /// Write the cost table as CSV (`i,ip,sigma_star`); stdout when omitted.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Print the optimal behavior between two anchors as JSON labels
    /// instead of the table, e.g. `--behavior 8,14`.
    #[arg(long, value_delimiter = ',')]
    behavior: Option<Vec<usize>>,
}

fn cmd_switching(args: &SwitchingArgs) -> anyhow::Result<i32> {
    let instance = io::read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let table = tousched_core::spaces(&instance);
    if let Some(anchors) = &args.behavior {
        if anchors.len() != 2 {
            bail!("--behavior takes exactly two anchors, e.g. 8,14");
        }
        let (i, ip) = (anchors[0], anchors[1]);
        let d = instance.diagram();
        let labels: Vec<(String, String)> = table
            .behavior(&instance, i, ip)
            .with_context(|| format!("no switching between {i} and {ip}"))?
            .iter()
            .map(|(s, sp)| (d.state_name(*s).to_string(), d.state_name(*sp).to_string()))
            .collect();
        println!("{}", serde_json::to_string(&labels)?);
        return Ok(0);
    }
    let mut out = String::from("i,ip,sigma_star\n");
    let h = instance.horizon();
    for i in 1..h {
        for ip in i + 1..=h {
            if let Some(cost) = table.cost(i, ip) {
                out.push_str(&format!("{i},{ip},{}\n", rational_str(&cost)));
            }
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(0)
}

fn parse_duration(text: &str) -> Result<Duration, String> {
    let t = text.trim();
    let (value, unit) = t.split_at(t.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(t.len()));
    let value: u64 = value
        .parse()
        .map_err(|_| format!("bad duration '{text}' (expected e.g. 60s, 500ms)"))?;
    match unit {
        "ms" => Ok(Duration::from_millis(value)),
        "s" | "" => Ok(Duration::from_secs(value)),
        "m" => Ok(Duration::from_secs(value * 60)),
        other => Err(format!("unknown duration unit '{other}'")),
    }
}

fn rational_str(r: &Rational) -> String {
    match rational_to_json(r) {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s,
        _ => unreachable!(),
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "Optimal",
        SolveStatus::Feasible => "Feasible",
        SolveStatus::Infeasible => "Infeasible",
        SolveStatus::TimedOut => "TimedOut",
    }
}

fn status_exit(s: SolveStatus) -> i32 {
    match s {
        SolveStatus::Optimal | SolveStatus::Feasible => 0,
        SolveStatus::Infeasible => 2,
        SolveStatus::TimedOut => 3,
    }
}

fn result_json(result: &SolveResult) -> serde_json::Value {
    let opt = |r: &Option<Rational>| {
        r.as_ref()
            .map(rational_to_json)
            .unwrap_or(serde_json::Value::Null)
    };
    serde_json::json!({
        "status": status_name(result.status),
        "tec": opt(&result.ub),
        "ub": opt(&result.ub),
        "lb": opt(&result.lb),
        "nodes": result.nodes,
        "time_ms": result.wall_time.as_millis() as u64,
        "preprocess_ms": result.preprocess_time.as_millis() as u64,
    })
}

fn cmd_solve(args: &SolveArgs) -> anyhow::Result<i32> {
    let instance = io::read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let config = args.flags.config();
    let verbose = args.verbose;
    let mut on_node = |e: &tousched_core::ProgressEvent| {
        if verbose {
            eprintln!(
                "node {:>6} depth {:>3} lb {} ub {}",
                e.nodes,
                e.depth,
                e.node_lb.map_or("-".into(), |r| rational_str(&r)),
                e.incumbent.map_or("-".into(), |r| rational_str(&r)),
            );
        }
    };
    let result = solve_with_progress(&instance, &config, &mut on_node);
    println!("{}", result_json(&result));
    if let (Some(out), Some(schedule)) = (&args.out, &result.schedule) {
        std::fs::write(out, io::schedule_to_string(&instance, schedule)?)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(status_exit(result.status))
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<i32> {
    let instance = io::read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let text = std::fs::read_to_string(&args.schedule)
        .with_context(|| format!("reading {}", args.schedule.display()))?;
    let schedule = io::schedule_from_str(&instance, &text)?;
    match model::validate(&instance, &schedule) {
        Ok(tec) => {
            println!("{}", serde_json::json!({ "ok": true, "tec": rational_to_json(&tec) }));
            Ok(0)
        }
        Err(violations) => {
            let messages: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            println!("{}", serde_json::json!({ "ok": false, "violations": messages }));
            Ok(2)
        }
    }
}

fn load_diagram(name: &str) -> anyhow::Result<tousched_core::TransitionDiagram> {
    match name {
        "nosby" => Ok(instgen::nosby()),
        "standby-demo" => Ok(instgen::standby_demo()),
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading diagram {path}"))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            Ok(io::diagram_from_json(&value)?)
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<i32> {
    let instance = if let Some(spec_path) = &args.spec {
        let file = io::read_genspec(spec_path)?;
        let spec = file
            .specs
            .first()
            .context("spec file lists no seeds")?;
        instgen::generate(spec)?
    } else {
        let cost_source = if let Some(profile) = &args.profile {
            CostSource::Profile {
                costs: instgen::ingest_prices(profile, "idx", "cost")?,
                offset: args.offset,
                repeat: !args.no_repeat,
            }
        } else {
            CostSource::UniformInt {
                lo: args.cost_lo,
                hi: args.cost_hi,
            }
        };
        let spec = GenSpec {
            n: args.n,
            proc_time_set: args.pset.clone(),
            cost_source,
            lambda: parse_rational(&args.lambda)?,
            seed: args.seed,
            diagram: load_diagram(&args.diagram)?,
        };
        instgen::generate(&spec)?
    };
    let text = io::instance_to_string(&instance);
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(0)
}

struct BenchRow {
    instance_id: String,
    n: usize,
    h: usize,
    proc_time_set: String,
    status: String,
    ub: String,
    lb: String,
    gap_percent: String,
    nodes: u64,
    time_ms: u64,
    preprocess_ms: u64,
}

fn bench_row(id: String, spec: &GenSpec, result: anyhow::Result<(usize, SolveResult)>) -> BenchRow {
    let pset = spec
        .proc_time_set
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    match result {
        Ok((h, r)) => {
            let gap = match (&r.ub, &r.lb) {
                (Some(ub), Some(lb)) if *ub > Rational::from_integer(0) => {
                    let g = (*ub - *lb) / *ub * Rational::from_integer(100);
                    format!("{:.4}", (*g.numer() as f64) / (*g.denom() as f64))
                }
                _ => String::new(),
            };
            BenchRow {
                instance_id: id,
                n: spec.n,
                h,
                proc_time_set: pset,
                status: status_name(r.status).to_string(),
                ub: r.ub.as_ref().map(rational_str).unwrap_or_default(),
                lb: r.lb.as_ref().map(rational_str).unwrap_or_default(),
                gap_percent: gap,
                nodes: r.nodes,
                time_ms: r.wall_time.as_millis() as u64,
                preprocess_ms: r.preprocess_time.as_millis() as u64,
            }
        }
        Err(e) => BenchRow {
            instance_id: id,
            n: spec.n,
            h: 0,
            proc_time_set: pset,
            status: format!("Error: {e}"),
            ub: String::new(),
            lb: String::new(),
            gap_percent: String::new(),
            nodes: 0,
            time_ms: 0,
            preprocess_ms: 0,
        },
    }
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<i32> {
    let mut spec_files: Vec<PathBuf> = Vec::new();
    if args.spec.is_dir() {
        for entry in std::fs::read_dir(&args.spec)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                spec_files.push(path);
            }
        }
        spec_files.sort();
    } else {
        spec_files.push(args.spec.clone());
    }

    let mut tasks: Vec<(String, GenSpec)> = Vec::new();
    for path in &spec_files {
        let file = io::read_genspec(path)?;
        for spec in file.specs {
            tasks.push((format!("{}-{}", file.name, spec.seed), spec));
        }
    }

    let config = args.flags.config();
    let run = |(id, spec): &(String, GenSpec)| -> BenchRow {
        let outcome = (|| {
            let instance = instgen::generate(spec)?;
            let h = instance.horizon();
            Ok((h, tousched_core::solve(&instance, &config)))
        })();
        bench_row(id.clone(), spec, outcome)
    };

    let mut rows: Vec<BenchRow> = if args.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()?;
        pool.install(|| {
            use rayon::prelude::*;
            tasks.par_iter().map(run).collect()
        })
    } else {
        tasks.iter().map(run).collect()
    };
    rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));

    let mut csv = String::from(
        "instance_id,n,h,proc_time_set,status,ub,lb,gap_percent,nodes,time_ms,preprocess_ms\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance_id,
            r.n,
            r.h,
            r.proc_time_set,
            r.status,
            r.ub,
            r.lb,
            r.gap_percent,
            r.nodes,
            r.time_ms,
            r.preprocess_ms
        ));
    }
    std::fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;

    // One aggregate line per spec group, plus an overall line when there
    // are several groups.
    let mut groups: Vec<String> = Vec::new();
    for r in &rows {
        let group = r
            .instance_id
            .rsplit_once('-')
            .map_or(r.instance_id.as_str(), |(g, _)| g)
            .to_string();
        if !groups.contains(&group) {
            groups.push(group);
        }
    }
    let aggregate = |label: &str, rows: &[&BenchRow]| {
        let optimal = rows.iter().filter(|r| r.status == "Optimal").count();
        let feasible = rows.iter().filter(|r| r.status == "Feasible").count();
        let gaps: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.gap_percent.parse::<f64>().ok())
            .collect();
        let mean_gap = if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        };
        let mean_time = if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| r.time_ms as f64).sum::<f64>() / rows.len() as f64
        };
        println!(
            "{label}: #o={optimal} #s={feasible} mean_gap={mean_gap:.3}% mean_time={mean_time:.1}ms over {} instances",
            rows.len()
        );
    };
    for group in &groups {
        let members: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| {
                r.instance_id
                    .rsplit_once('-')
                    .map_or(r.instance_id.as_str(), |(g, _)| g)
                    == group
            })
            .collect();
        aggregate(group, &members);
    }
    if groups.len() != 1 {
        aggregate("total", &rows.iter().collect::<Vec<_>>());
    }
    Ok(0)
}

fn grid(from: &str, to: &str, steps: usize) -> anyhow::Result<Vec<Rational>> {
    let lo = parse_rational(from)?;
    let hi = parse_rational(to)?;
    if steps <= 1 {
        return Ok(vec![lo]);
    }
    let d = Rational::from_integer((steps - 1) as i64);
    Ok((0..steps)
        .map(|k| lo + (hi - lo) * Rational::from_integer(k as i64) / d)
        .collect())
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<i32> {
    let template = io::read_instance(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let base = io::instance_to_json(&template);
    let d = template.diagram();
    let off = d.off().index();
    let proc = d.proc().index();

    let config = args.flags.config();
    let mut out = String::from("p_on,p_off,status,tec\n");
    for p_on in grid(&args.on_from, &args.on_to, args.on_steps)? {
        for p_off in grid(&args.off_from, &args.off_to, args.off_steps)? {
            let mut v = base.clone();
            v["transition_power"][off][proc] = rational_to_json(&p_on);
            v["transition_power"][proc][off] = rational_to_json(&p_off);
            let line = match io::instance_from_json(&v) {
                Ok(instance) => {
                    let r = tousched_core::solve(&instance, &config);
                    format!(
                        "{},{},{},{}\n",
                        rational_str(&p_on),
                        rational_str(&p_off),
                        status_name(r.status),
                        r.ub.as_ref().map(rational_str).unwrap_or_default()
                    )
                }
                Err(e) => format!(
                    "{},{},Error: {e},\n",
                    rational_str(&p_on),
                    rational_str(&p_off)
                ),
            };
            out.push_str(&line);
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Switching(args) => cmd_switching(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_parsing() {
        assert_eq!(parse_duration("60s").unwrap(), Duration::from_secs(60));
        assert_eq!(parse_duration("500ms").unwrap(), Duration::from_millis(500));
        assert_eq!(parse_duration("0ms").unwrap(), Duration::ZERO);
        assert_eq!(parse_duration("2m").unwrap(), Duration::from_secs(120));
        assert!(parse_duration("1h").is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = grid("0", "10", 3).unwrap();
        assert_eq!(
            g,
            vec![
                Rational::from_integer(0),
                Rational::from_integer(5),
                Rational::from_integer(10)
            ]
        );
        assert_eq!(grid("4", "9", 1).unwrap(), vec![Rational::from_integer(4)]);
    }
}
