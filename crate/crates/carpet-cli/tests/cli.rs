//! End-to-end tests of the compiled binary: flag handling, artifact
//! emission, caching behavior, verification suites, and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn carpet() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_carpet"));
    // keep the ambient environment from leaking a cache location in
    cmd.env_remove("CARPET_CACHE_DIR");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

/// All files below `dir`, recursively.
fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let Ok(entries) = fs::read_dir(&current) else {
            continue;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                found.push(path);
            }
        }
    }
    found.sort();
    found
}

#[test]
fn resist_reports_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |cache: &Path| {
        let mut cmd = carpet();
        cmd.args(["resist", "--N", "2", "--kind", "G", "--m", "1", "--cache-dir"])
            .arg(cache);
        stdout_json(&run_ok(&mut cmd))
    };

    let mut cold = run(&cache);
    assert!((cold["R"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(cold["cached"], serde_json::Value::Bool(false));
    assert_eq!(cold["flux_per_side"].as_array().unwrap().len(), 4);

    let warm = run(&cache);
    assert_eq!(warm["cached"], serde_json::Value::Bool(true));
    // apart from the cache marker the two documents are identical
    cold["cached"] = serde_json::Value::Bool(true);
    assert_eq!(cold, warm);
}

#[test]
fn corrupt_cache_entries_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |cache: &Path| {
        let mut cmd = carpet();
        cmd.args(["resist", "--N", "2", "--kind", "D", "--m", "1", "--cache-dir"])
            .arg(cache);
        let output = run_ok(&mut cmd);
        stdout_json(&output)
    };

    assert_eq!(run(&cache)["cached"], serde_json::Value::Bool(false));
    let entries = files_under(&cache);
    assert_eq!(entries.len(), 1, "one cache entry expected: {entries:?}");
    fs::write(&entries[0], "not json at all").unwrap();

    let recomputed = run(&cache);
    assert_eq!(recomputed["cached"], serde_json::Value::Bool(false));
    assert!((recomputed["R"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    // and the entry was repaired
    assert_eq!(run(&cache)["cached"], serde_json::Value::Bool(true));
}

#[test]
fn cache_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("env-cache");
    let mut cmd = carpet();
    cmd.args(["resist", "--N", "2", "--kind", "G", "--m", "1"])
        .env("CARPET_CACHE_DIR", &cache)
        .current_dir(dir.path());
    run_ok(&mut cmd);
    assert_eq!(files_under(&cache).len(), 1);

    // --no-cache leaves no trace
    let bare = dir.path().join("no-cache");
    let mut cmd = carpet();
    cmd.args(["resist", "--N", "2", "--kind", "G", "--m", "1", "--no-cache"])
        .env("CARPET_CACHE_DIR", &bare)
        .current_dir(dir.path());
    run_ok(&mut cmd);
    assert!(!bare.exists());
}

#[test]
fn gen_is_deterministic_with_the_expected_cell_count() {
    let dir = tempfile::tempdir().unwrap();
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out_a, &out_b] {
        let mut cmd = carpet();
        cmd.args(["gen", "--N", "2", "--level", "2", "--highlight-ab", "--out"])
            .arg(out);
        run_ok(&mut cmd);
    }
    let cells: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("carpet-N2-level2.json")).unwrap())
            .unwrap();
    assert_eq!(cells["cells"].as_array().unwrap().len(), 64);
    let svg_a = fs::read(out_a.join("carpet-N2-level2.svg")).unwrap();
    let svg_b = fs::read(out_b.join("carpet-N2-level2.svg")).unwrap();
    assert_eq!(svg_a, svg_b, "repeated invocations must emit identical bytes");
}

#[test]
fn graph_emits_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = carpet();
    cmd.args(["graph", "--N", "3", "--kind", "G", "--m", "1", "--out"])
        .arg(dir.path());
    let output = run_ok(&mut cmd);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("vertices = 36"), "stdout: {stdout}");
    let graph: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("graph-N3-G1.json")).unwrap())
            .unwrap();
    assert_eq!(graph["vertices"].as_array().unwrap().len(), 36);
    assert!(dir.path().join("graph-N3-G1.svg").exists());
}

#[test]
fn fem_summary_matches_the_frozen_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = carpet();
    cmd.args(["fem", "--N", "2", "--level", "0", "--k", "2", "--table", "--out"])
        .arg(dir.path());
    run_ok(&mut cmd);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fem-N2-n0-k2.json")).unwrap())
            .unwrap();
    let resistance = summary["resistance"].as_f64().unwrap();
    assert!((resistance / 0.47538420243761764 - 1.0).abs() < 1e-10);
    let ladder = fs::read_to_string(dir.path().join("fem-N2-n0-k2-convergence.csv")).unwrap();
    assert_eq!(ladder.lines().count(), 4, "header plus k = 0, 1, 2");
    assert!(dir.path().join("fem-N2-n0-k2-solution.csv").exists());
}

#[test]
fn verify_suites_pass_and_report_counts() {
    for (suite, extra) in [
        ("duality", vec!["--m-max", "3"]),
        ("beta", vec!["--N", "5"]),
        ("thomson", vec!["--m-max", "2"]),
    ] {
        let mut cmd = carpet();
        cmd.args(["verify", "--suite", suite, "--no-cache"]).args(&extra);
        let output = run_ok(&mut cmd);
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(
            stdout.contains("checks passed"),
            "suite {suite} stdout: {stdout}"
        );
    }
}

#[test]
fn scaling_report_has_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = carpet();
    cmd.args([
        "scaling", "--N", "2", "--m-max", "2", "--n-max", "1", "--k-max", "3", "--out",
    ])
    .arg(dir.path());
    run_ok(&mut cmd);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scaling-N2.json")).unwrap())
            .unwrap();
    for key in ["N", "sequences", "duality", "rho", "sandwich", "fekete"] {
        assert!(report.get(key).is_some(), "missing section {key}");
    }
    assert_eq!(report["sandwich"]["all_hold"], serde_json::Value::Bool(true));
}

#[test]
fn config_file_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_ok(carpet().args(["config", "--N", "3"]));
    let path = dir.path().join("run.conf");
    fs::write(&path, &output.stdout).unwrap();

    // the config file sets N = 3 ...
    let mut cmd = carpet();
    cmd.args(["resist", "--kind", "G", "--m", "1", "--no-cache", "--config"])
        .arg(&path);
    let value = stdout_json(&run_ok(&mut cmd));
    assert!((value["R"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    // ... and a flag overrides the file
    let mut cmd = carpet();
    cmd.args(["resist", "--kind", "G", "--m", "1", "--no-cache", "--N", "2", "--config"])
        .arg(&path);
    let value = stdout_json(&run_ok(&mut cmd));
    assert!((value["R"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    // domain error: exit 1
    let output = carpet()
        .args(["resist", "--N", "2", "--kind", "G", "--m", "0", "--no-cache"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("at least 1"));

    // cap violation: exit 1 with a hint
    let output = carpet()
        .args(["fem", "--N", "2", "--level", "5", "--k", "1", "--no-cache"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("fem_n_max"));

    // usage error: clap's exit 2
    let output = carpet()
        .args(["resist", "--N", "2", "--kind", "X", "--m", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
