//! End-to-end tests of the command-line interface: exit codes, JSON
//! output, schedule round-trips, benchmark CSVs and parameter sweeps.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tousched"))
}

fn example_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example1.json")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tousched-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_reports_the_reference_optimum() {
    let out = bin().args(["solve", "-i"]).arg(example_path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"status\":\"Optimal\""), "{text}");
    assert!(text.contains("\"tec\":342"), "{text}");
}

#[test]
fn zero_time_limit_exits_with_timeout_code() {
    let out = bin()
        .args(["solve", "--time-limit", "0ms", "-i"])
        .arg(example_path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("\"status\":\"TimedOut\""));
}

#[test]
fn corrupted_instances_exit_1_naming_the_problem() {
    let dir = tmp_dir("corrupt");
    let path = dir.join("bad.json");
    let mut instance: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(example_path()).unwrap()).unwrap();
    instance["horizon"] = serde_json::Value::from(99);
    std::fs::write(&path, instance.to_string()).unwrap();
    let out = bin().args(["solve", "-i"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("horizon"), "{err}");

    std::fs::write(&path, "{ not json").unwrap();
    let out = bin().args(["solve", "-i"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_output_revalidates_with_identical_tec() {
    let dir = tmp_dir("roundtrip");
    let sched = dir.join("schedule.json");
    let out = bin()
        .args(["solve", "-i"])
        .arg(example_path())
        .args(["-o"])
        .arg(&sched)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = bin()
        .args(["validate", "-i"])
        .arg(example_path())
        .args(["-s"])
        .arg(&sched)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"ok\":true"), "{text}");
    assert!(text.contains("\"tec\":342"), "{text}");

    // Break the schedule: the validator must name a violation and exit 2.
    let mut parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sched).unwrap()).unwrap();
    parsed["omega"][0] = serde_json::json!(["off", "proc"]);
    std::fs::write(&sched, parsed.to_string()).unwrap();
    let out = bin()
        .args(["validate", "-i"])
        .arg(example_path())
        .args(["-s"])
        .arg(&sched)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("\"ok\":false"));
}

#[test]
fn generate_produces_a_solvable_instance() {
    let dir = tmp_dir("generate");
    let inst = dir.join("inst.json");
    let out = bin()
        .args([
            "generate", "--n", "4", "--pset", "1,2,4", "--seed", "11", "--lambda", "2", "-o",
        ])
        .arg(&inst)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().args(["solve", "-i"]).arg(&inst).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("\"status\":\"Optimal\""));
}

fn strip_time_columns(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            cols[..cols.len().saturating_sub(2)].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_writes_deterministic_rows() {
    let dir = tmp_dir("bench");
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "name": "tiny",
            "n": 6,
            "proc_time_set": [1, 2, 4],
            "lambda": "2",
            "cost": {"uniform": {"lo": 1, "hi": 10}},
            "diagram": "nosby",
            "seeds": [1, 2, 3]
        }"#,
    )
    .unwrap();
    let csv_a = dir.join("a.csv");
    let csv_b = dir.join("b.csv");
    for out_path in [&csv_a, &csv_b] {
        let out = bin()
            .args(["bench", "--spec"])
            .arg(&spec)
            .args(["--out"])
            .arg(out_path)
            .args(["--time-limit", "30s"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout(&out).contains("tiny: #o=3"), "{}", stdout(&out));
    }
    let a = std::fs::read_to_string(&csv_a).unwrap();
    let b = std::fs::read_to_string(&csv_b).unwrap();
    assert_eq!(strip_time_columns(&a), strip_time_columns(&b));
    assert_eq!(a.lines().count(), 4, "header plus one row per seed");
    assert!(a.starts_with(
        "instance_id,n,h,proc_time_set,status,ub,lb,gap_percent,nodes,time_ms,preprocess_ms"
    ));
    assert!(a.contains("tiny-1,6,"));
}

#[test]
fn bench_on_an_empty_directory_writes_only_the_header() {
    let dir = tmp_dir("bench-empty");
    let specs = dir.join("specs");
    std::fs::create_dir_all(&specs).unwrap();
    let csv = dir.join("out.csv");
    let out = bin()
        .args(["bench", "--spec"])
        .arg(&specs)
        .args(["--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn sweep_matches_individual_solves() {
    let dir = tmp_dir("sweep");
    let csv = dir.join("sweep.csv");
    let out = bin()
        .args(["sweep", "-i"])
        .arg(example_path())
        .args([
            "--on-from", "5", "--on-to", "50", "--on-steps", "2",
            "--off-from", "1", "--off-to", "9", "--off-steps", "2",
            "--out",
        ])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // The original parameters (turn-on 5, turn-off 1) stay at 342.
    assert!(rows.contains(&"5,1,Optimal,342"), "{text}");

    // Cross-check one other grid point against a direct solve.
    let mut instance: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(example_path()).unwrap()).unwrap();
    instance["transition_power"][0][2] = serde_json::Value::from(50);
    instance["transition_power"][2][0] = serde_json::Value::from(9);
    let modified = dir.join("modified.json");
    std::fs::write(&modified, instance.to_string()).unwrap();
    let direct = bin().args(["solve", "-i"]).arg(&modified).output().unwrap();
    let direct_tec: serde_json::Value =
        serde_json::from_str(stdout(&direct).trim()).unwrap();
    let expected = format!("50,9,Optimal,{}", direct_tec["tec"]);
    assert!(rows.contains(&expected.as_str()), "{text} vs {expected}");

    // Raising the turn-on power never lowers the optimum on this
    // non-negative cost vector.
    let tec_of = |row: &str| -> i64 { row.rsplit(',').next().unwrap().parse().unwrap() };
    let low_on: Vec<&str> = rows.iter().filter(|r| r.starts_with("5,")).copied().collect();
    let high_on: Vec<&str> = rows.iter().filter(|r| r.starts_with("50,")).copied().collect();
    for (lo, hi) in low_on.iter().zip(&high_on) {
        assert!(tec_of(hi) >= tec_of(lo), "{lo} vs {hi}");
    }
}

#[test]
fn bench_parallel_rows_match_sequential() {
    let dir = tmp_dir("bench-par");
    let spec = dir.join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "name": "par",
            "n": 8,
            "proc_time_set": [1, 2, 3],
            "lambda": "13/10",
            "cost": {"uniform": {"lo": 1, "hi": 10}},
            "diagram": "nosby",
            "seeds": [1, 2, 3, 4, 5, 6]
        }"#,
    )
    .unwrap();
    let seq_csv = dir.join("seq.csv");
    let par_csv = dir.join("par.csv");
    for (path, jobs) in [(&seq_csv, "1"), (&par_csv, "3")] {
        let out = bin()
            .args(["bench", "--spec"])
            .arg(&spec)
            .args(["--out"])
            .arg(path)
            .args(["--jobs", jobs])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read_to_string(&seq_csv).unwrap();
    let b = std::fs::read_to_string(&par_csv).unwrap();
    assert_eq!(strip_time_columns(&a), strip_time_columns(&b));
}

#[test]
fn verbose_solve_streams_progress_to_stderr() {
    let out = bin()
        .args(["solve", "-v", "-i"])
        .arg(example_path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("node"), "{err}");
    assert!(err.contains("lb 339"), "{err}");
}

#[test]
fn switching_dump_table_and_behavior() {
    let dir = tmp_dir("switching");
    let csv = dir.join("table.csv");
    let out = bin()
        .args(["switching", "-i"])
        .arg(example_path())
        .args(["--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("i,ip,sigma_star"));
    assert!(table.contains("\n8,14,76\n"), "{table}");

    let out = bin()
        .args(["switching", "-i"])
        .arg(example_path())
        .args(["--behavior", "8,14"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out).trim(),
        r#"[["proc","off"],["off","off"],["off","off"],["off","proc"],["off","proc"]]"#
    );
}
