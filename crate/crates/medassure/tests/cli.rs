//! End-to-end checks of the command-line binary, including exit codes:
//! 0 success, 1 usage, 2 data, 3 internal.

use std::path::Path;
use std::process::{Command, Output};

fn medassure(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medassure"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn assets() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

#[test]
fn synth_learn_fit_infer_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = medassure(&["synth", "--n", "8000", "--seed", "7", "--out", "data"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("data/records.csv").exists());
    assert!(dir.path().join("data/planted.bn").exists());

    let out = medassure(
        &["learn", "--records", "data/records.csv", "--out", "learn"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("learn/structure.dot").exists());
    assert!(dir.path().join("learn/trace.csv").exists());

    let out = medassure(
        &[
            "fit",
            "--records",
            "data/records.csv",
            "--structure",
            "learn/structure.bn",
            "--out",
            "net.bn",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let out = medassure(
        &[
            "infer",
            "--net",
            "net.bn",
            "--context",
            "Surgery=2,Pre_beta=1",
            "--exposure",
            "Post_beta",
            "--outcome",
            "AF",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ARR ="), "{text}");
    assert!(text.contains("NNT"), "{text}");
}

#[test]
fn mine_filters_epidural_traces() {
    let dir = tempfile::tempdir().unwrap();
    let events = assets().join("demo/events.csv");
    let out = medassure(
        &[
            "mine",
            "--events",
            events.to_str().unwrap(),
            "--filter",
            "contains=Epidural",
            "--out",
            "dfg.dot",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("5 traces after filtering"), "{}", stdout(&out));
    let dot = std::fs::read_to_string(dir.path().join("dfg.dot")).unwrap();
    assert!(dot.contains("\"Epidural\" -> \"Hypotension\""));
    assert!(dot.contains("__start"));
}

#[test]
fn run_executes_the_demo_config_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    // assemble a self-contained copy of the demo with small synthetic data
    std::fs::copy(assets().join("demo/events.csv"), dir.path().join("events.csv")).unwrap();
    let out = medassure(&["synth", "--n", "5000", "--seed", "7", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let config = format!(
        r#"
[paths]
records = "records.csv"
events = "events.csv"
hazards = "{hazards}"
template = "{template}"
out_dir = "run"

[split]
seed = 7

[dfg]
filter = "contains=Epidural"

[[queries]]
context = "Surgery=2,Pre_beta=1"
exposure = "Post_beta"
outcome = "AF"
"#,
        hazards = assets().join("hazards/beta_blocker.hz").display(),
        template = assets().join("templates/af_prevention.toml").display(),
    );
    std::fs::write(dir.path().join("config.toml"), config).unwrap();
    let out = medassure(&["run", "--config", "config.toml"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    for artifact in [
        "structure.dot",
        "trace.csv",
        "net.bn",
        "metrics.csv",
        "risk.csv",
        "dfg.dot",
        "argument.dot",
        "gaps.txt",
        "manifest.txt",
    ] {
        assert!(dir.path().join("run").join(artifact).exists(), "missing {artifact}");
    }
    let gaps = std::fs::read_to_string(dir.path().join("run/gaps.txt")).unwrap();
    assert!(gaps.contains("(Epidural, Hypotension)"), "{gaps}");
    let manifest = std::fs::read_to_string(dir.path().join("run/manifest.txt")).unwrap();
    assert!(manifest.contains("[config]"));
    assert!(manifest.contains("seed = 7"));
    assert!(manifest.contains("sha256="));
}

#[test]
fn argue_consumes_findings_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("findings.csv"),
        "finding_id,kind,a,b,value,source,detail\n\
         edge:Epidural--Hypotension,edge_absent,Epidural,Hypotension,,structure-learning,\n\
         edge:Hypotension--Post_beta,edge_present,Hypotension,Post_beta,,structure-learning,\n\
         risk:Post_beta->AF,risk_delta,Post_beta,AF,0.11,inference,Surgery=2;Pre_beta=1\n",
    )
    .unwrap();
    let out = medassure(
        &[
            "argue",
            "--hazards",
            assets().join("hazards/beta_blocker.hz").to_str().unwrap(),
            "--template",
            assets().join("templates/af_prevention.toml").to_str().unwrap(),
            "--findings",
            "findings.csv",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let argument = std::fs::read_to_string(dir.path().join("argument.dot")).unwrap();
    assert!(argument.contains("Omission of BB"));
    assert!(argument.contains("shape=parallelogram"));
    let gaps = std::fs::read_to_string(dir.path().join("gaps.txt")).unwrap();
    assert!(gaps.contains("ARR 11%, NNT 9"), "{gaps}");
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // unknown flag
    let out = medassure(&["synth", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    // unknown variable in a query against a valid net
    let ok = medassure(&["synth", "--n", "50", "--seed", "1", "--out", "."], dir.path());
    assert!(ok.status.success());
    let out = medassure(
        &[
            "infer",
            "--net",
            "planted.bn",
            "--context",
            "Ward_load=1",
            "--target",
            "AF",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("Ward_load"), "{}", stderr(&out));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = medassure(
        &["learn", "--records", "missing.csv", "--out", "."],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    std::fs::write(
        dir.path().join("bad.csv"),
        "encounter_id,Surgery,Pre_beta,Post_beta,Hypotension,Epidural,AF\ne1,9,0,0,0,0,0\n",
    )
    .unwrap();
    let out = medassure(&["learn", "--records", "bad.csv", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

#[test]
fn sweep_prints_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    let ok = medassure(&["synth", "--n", "2000", "--seed", "3", "--out", "."], dir.path());
    assert!(ok.status.success());
    let out = medassure(
        &[
            "sweep",
            "--records",
            "records.csv",
            "--alphas",
            "0.5,1,2,5,10",
            "--out",
            "sweep",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for alpha in ["0.5", "1", "2", "5", "10"] {
        assert!(text.contains(&format!("alpha {alpha}:")), "{text}");
        assert!(dir
            .path()
            .join(format!("sweep/structure_a{alpha}.dot"))
            .exists());
    }
    assert!(dir.path().join("sweep/sweep.csv").exists());
}

#[test]
fn metrics_writes_shared_format_and_roc() {
    let dir = tempfile::tempdir().unwrap();
    let ok = medassure(&["synth", "--n", "6000", "--seed", "5", "--out", "."], dir.path());
    assert!(ok.status.success());
    let out = medassure(
        &[
            "metrics",
            "--records",
            "records.csv",
            "--seed",
            "11",
            "--roc-steps",
            "10",
            "--out",
            "m",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let metrics = std::fs::read_to_string(dir.path().join("m/metrics.csv")).unwrap();
    assert!(metrics.starts_with("query,context,exposure,value\n"));
    assert!(metrics.contains("bn_accuracy,target=AF"));
    assert!(metrics.contains("lr_accuracy,target=AF"));
    let roc = std::fs::read_to_string(dir.path().join("m/roc.csv")).unwrap();
    assert_eq!(roc.lines().count(), 12); // header + 11 thresholds
}
