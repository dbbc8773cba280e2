//! End-to-end tests of the `mbpep` binary: command round trips, exit
//! codes, and byte-level determinism of the written artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn mbpep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mbpep"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> i32 {
    let out = cmd.output().expect("binary runs");
    out.status.code().expect("no signal")
}

fn gen_csv(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join("data.csv");
    run_ok(mbpep()
        .arg("gen-data")
        .args(["--kind", "cubic"])
        .args(["--n", &n.to_string()])
        .args(["--seed", &seed.to_string()])
        .arg("--out")
        .arg(&path));
    path
}

/// Tiny but complete training flags: quick to run, still exercises the
/// whole pipeline including pruning.
fn quick_train_args<'c>(cmd: &'c mut Command, data: &Path, out: &Path) -> &'c mut Command {
    cmd.arg("train")
        .arg("--data")
        .arg(data)
        .args(["--seed", "42", "--pool-size", "3", "--epochs", "30"])
        .arg("--out")
        .arg(out)
}

#[test]
fn gen_data_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 50, 9);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 51); // header + rows
    assert_eq!(text.lines().next(), Some("x,y"));
}

#[test]
fn train_eval_round_trip_reproduces_test_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 200, 3);
    let out = dir.path().join("run");
    let test_csv = dir.path().join("test.csv");
    run_ok(quick_train_args(&mut mbpep(), &csv, &out)
        .arg("--test-out")
        .arg(&test_csv));

    let eval_json = dir.path().join("eval.json");
    let trace_csv = dir.path().join("trace.csv");
    run_ok(mbpep()
        .arg("eval")
        .arg("--model")
        .arg(out.join("model.json"))
        .arg("--data")
        .arg(&test_csv)
        .arg("--trace-out")
        .arg(&trace_csv)
        .arg("--out")
        .arg(&eval_json));

    // the saved test split went through CSV in original units; scoring it
    // again through the saved normalization must reproduce the training
    // run's test metrics exactly
    let train: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&eval_json).unwrap()).unwrap();
    assert_eq!(train["format"], "mbpep-report/1");
    assert_eq!(eval["format"], "mbpep-report/1");
    assert_eq!(train["kind"], "train");
    assert_eq!(eval["kind"], "eval");
    assert_eq!(train["metrics"], eval["metrics"]);
    assert_eq!(train["ensemble"], eval["ensemble"]);

    // the interval trace carries one row per evaluated sample, bounds last
    let trace = std::fs::read_to_string(&trace_csv).unwrap();
    let mut lines = trace.lines();
    let header = lines.next().unwrap();
    assert!(header.ends_with(",y,y_lower,y_upper"), "header: {header}");
    let n_rows = lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), header.split(',').count());
            let lo: f64 = fields[fields.len() - 2].parse().unwrap();
            let hi: f64 = fields[fields.len() - 1].parse().unwrap();
            assert!(lo <= hi, "inverted interval in trace: {line}");
        })
        .count();
    let eval_rows = eval["data"]["n_rows"].as_u64().unwrap() as usize;
    assert_eq!(n_rows, eval_rows);
}

#[test]
fn reruns_write_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 150, 5);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(quick_train_args(&mut mbpep(), &csv, &a));
    run_ok(quick_train_args(&mut mbpep(), &csv, &b));
    assert_eq!(
        std::fs::read(a.join("model.json")).unwrap(),
        std::fs::read(b.join("model.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 120, 6);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(quick_train_args(&mut mbpep(), &csv, &a).args(["--threads", "1"]));
    run_ok(quick_train_args(mbpep().env("MBPEP_THREADS", "3"), &csv, &b));
    assert_eq!(
        std::fs::read(a.join("model.json")).unwrap(),
        std::fs::read(b.join("model.json")).unwrap()
    );
}

#[test]
fn no_prune_keeps_the_whole_pool() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 120, 8);
    let out = dir.path().join("run");
    run_ok(quick_train_args(&mut mbpep(), &csv, &out).arg("--no-prune"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    assert!(report["pruning"].is_null());
    assert_eq!(report["ensemble"]["pool_size"], 3);
    assert_eq!(report["ensemble"]["ensemble_size"], 3);
}

#[test]
fn config_document_drives_training() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 150, 2);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# test config\ndata.source = csv\ndata.path = {}\ntrain.pool_size = 2\n\
             train.epochs = 12\ntrain.hidden = 7\nloss.softness = 18\nseed = 5\n",
            csv.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("run");
    run_ok(mbpep()
        .arg("train")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--epochs", "9"])); // flag overrides the document
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["config"]["train"]["pool_size"], 2);
    assert_eq!(report["config"]["train"]["epochs"], 9);
    assert_eq!(report["config"]["train"]["hidden_dims"], serde_json::json!([7]));
    assert_eq!(report["config"]["train"]["loss"]["softness"], 18.0);
}

#[test]
fn bench_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 150, 4);
    let report_path = dir.path().join("bench.json");
    let trace_path = dir.path().join("trace.jsonl");
    run_ok(mbpep()
        .arg("bench")
        .arg("--data")
        .arg(&csv)
        .args(["--pool-sizes", "2,3", "--repeats", "2", "--epochs", "10", "--seed", "1"])
        .arg("--out")
        .arg(&report_path)
        .arg("--trace-out")
        .arg(&trace_path));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["format"], "mbpep-report/1");
    assert_eq!(report["kind"], "bench");
    assert_eq!(report["runs"].as_array().unwrap().len(), 4);
    // repeat r runs under seed + r
    assert_eq!(report["runs"][0]["seed"], 1);
    assert_eq!(report["runs"][1]["seed"], 2);
    let aggregates = report["aggregates"].as_array().unwrap();
    assert_eq!(aggregates.len(), 4); // 2 pool sizes x {unpruned, pruned}
    for agg in aggregates {
        assert_eq!(agg["n_runs"], 2);
        assert!(agg["picp"]["mean"].is_f64() || agg["picp"]["mean"].is_number());
        assert!(
            agg["picp"]["stderr"].is_number(),
            "two runs give a standard error: {agg}"
        );
    }
    // pruned arms never keep more learners than the pool holds
    for run in report["runs"].as_array().unwrap() {
        let pool = run["pool_size"].as_u64().unwrap();
        let kept = run["pruned"]["ensemble_size"].as_u64().unwrap();
        assert!(kept >= 1 && kept <= pool);
    }

    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 8); // 2 sizes x 2 repeats x 2 arms
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["arm"] == "pruned" || v["arm"] == "unpruned");
    }
}

#[test]
fn bench_single_repeat_has_null_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 120, 4);
    let report_path = dir.path().join("bench.json");
    run_ok(mbpep()
        .arg("bench")
        .arg("--data")
        .arg(&csv)
        .args(["--pool-sizes", "2", "--repeats", "1", "--epochs", "8"])
        .arg("--out")
        .arg(&report_path));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    for agg in report["aggregates"].as_array().unwrap() {
        assert!(agg["picp"]["stderr"].is_null(), "{agg}");
    }
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = gen_csv(dir.path(), 80, 1);
    let out = dir.path().join("out");

    // 2: usage error (clap)
    assert_eq!(exit_code(mbpep().arg("train").arg("--badflag")), 2);
    // 2: invalid flag value
    assert_eq!(
        exit_code(quick_train_args(&mut mbpep(), &csv, &out).args(["--confidence", "1.5"])),
        2
    );
    // 2: broken config document
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "no equals sign here\nseed = banana\n").unwrap();
    assert_eq!(
        exit_code(mbpep().arg("train").arg("--config").arg(&config).arg("--out").arg(&out)),
        2
    );
    // 2: degenerate generator arguments
    assert_eq!(
        exit_code(mbpep().args(["gen-data", "--kind", "exp", "--n", "0", "--out", "x.csv"])),
        2
    );
    // 3: missing data file
    assert_eq!(
        exit_code(quick_train_args(&mut mbpep(), &dir.path().join("nope.csv"), &out)),
        3
    );
    // 3: malformed csv
    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "x,y\n1,notanumber\n").unwrap();
    assert_eq!(exit_code(quick_train_args(&mut mbpep(), &bad_csv, &out)), 3);
    // 3: a json file that is not a model
    run_ok(quick_train_args(&mut mbpep(), &csv, &out));
    assert_eq!(
        exit_code(
            mbpep()
                .arg("eval")
                .arg("--model")
                .arg(out.join("report.json"))
                .arg("--data")
                .arg(&csv)
        ),
        3
    );
}

#[test]
fn stderr_names_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "seed = banana\nunknown.key = 1\n").unwrap();
    let out = mbpep()
        .arg("train")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    // both problems reported in one pass
    assert!(stderr.contains("line 1"), "{stderr}");
    assert!(stderr.contains("unknown key"), "{stderr}");
}
