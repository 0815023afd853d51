use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mvfuse_cli::RunReport;
use mvfuse_core::datagen::generate_blobs;
use tempfile::TempDir;

fn mvfuse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvfuse"))
        .current_dir(dir)
        .args(args)
        .env_remove("MVFUSE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_matrix(path: &Path, rows: impl IntoIterator<Item = Vec<f64>>) {
    let text: String = rows
        .into_iter()
        .map(|r| r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(path, text).unwrap();
}

/// Two feature views of three blobs plus their truth file.
fn blob_views(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (x, truth) = generate_blobs(60, 3, 3, 12.0, 1).unwrap();
    let (y, _) = generate_blobs(60, 3, 5, 12.0, 2).unwrap();
    let (a, b, t) = (dir.join("v1.csv"), dir.join("v2.csv"), dir.join("truth.csv"));
    write_matrix(&a, x.rows().into_iter().map(|r| r.to_vec()));
    write_matrix(&b, y.rows().into_iter().map(|r| r.to_vec()));
    fs::write(&t, truth.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    (a, b, t)
}

fn without_timings(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("timings").expect("timings key");
    serde_json::to_string(&v).unwrap()
}

#[test]
fn fuse_writes_report_and_graph() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    let out = mvfuse(
        dir.path(),
        &["fuse", "--mode", "sgf", "--k", "6", "--beta", "1", "--gamma", "1e4", "--clusters", "3", "--truth", "truth.csv", "v1.csv", "v2.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let json = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report.n_nodes, 60);
    assert_eq!(report.n_views, 2);
    assert_eq!(report.labels.len(), 60);
    assert_eq!(report.config.lambda, vec![1.0, 1.0]);
    assert_eq!(report.config.gamma, 1e4);
    assert!((report.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert_eq!(report.metrics.unwrap().nmi, 1.0);

    let tsv = fs::read_to_string(dir.path().join("graph.tsv")).unwrap();
    let mut entries = std::collections::HashMap::new();
    for line in tsv.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 3, "{line}");
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let w: f64 = f[2].parse().unwrap();
        assert!(i < 60 && j < 60 && w >= 0.0);
        // Shortest round-trip form re-prints identically.
        assert_eq!(format!("{w:?}"), f[2]);
        entries.insert((i, j), f[2].to_owned());
    }
    for (&(i, j), w) in &entries {
        assert_eq!(entries.get(&(j, i)), Some(w), "fused graph must be symmetric");
    }
}

#[test]
fn report_round_trips_losslessly() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "--no-graph", "v1.csv", "v2.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!dir.path().join("graph.tsv").exists());
    let json = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: RunReport = serde_json::from_str(&json).unwrap();
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, json);
    assert_eq!(serde_json::from_str::<RunReport>(&again).unwrap(), report);
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    for (name, mode) in [("a.json", "sgf"), ("b.json", "sgf"), ("c.json", "dgf"), ("d.json", "dgf")] {
        let out = mvfuse(dir.path(), &["fuse", "--mode", mode, "--clusters", "3", "--seed", "7", "--out", name, "v1.csv", "v2.csv"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let read = |n: &str| without_timings(&fs::read_to_string(dir.path().join(n)).unwrap());
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("c.json"), read("d.json"));
}

#[test]
fn distance_matrices_are_accepted() {
    let dir = TempDir::new().unwrap();
    let (x, _) = generate_blobs(30, 2, 2, 20.0, 5).unwrap();
    let d = |i: usize, j: usize| (&x.row(i) - &x.row(j)).mapv(|t| t * t).sum().sqrt();
    write_matrix(&dir.path().join("d.csv"), (0..30).map(|i| (0..30).map(|j| d(i, j)).collect()));
    let out = mvfuse(dir.path(), &["fuse", "--views-are", "distances", "--clusters", "2", "d.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    write_matrix(&dir.path().join("rect.csv"), (0..30).map(|i| vec![i as f64, 1.0]));
    let out = mvfuse(dir.path(), &["fuse", "--views-are", "distances", "--clusters", "2", "rect.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn header_line_is_skipped_on_request() {
    let dir = TempDir::new().unwrap();
    let (x, _) = generate_blobs(20, 2, 2, 20.0, 3).unwrap();
    let body: String = x.rows().into_iter().map(|r| format!("{:?},{:?}\n", r[0], r[1])).collect();
    fs::write(dir.path().join("h.csv"), format!("a,b\n{body}")).unwrap();
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "2", "h.csv"]);
    assert_eq!(code(&out), 2, "header without --header is malformed");
    let out = mvfuse(dir.path(), &["fuse", "--header", "--clusters", "2", "h.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());

    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "v1.csv", "nope.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope.csv"), "{}", stderr(&out));

    fs::write(dir.path().join("ragged.csv"), "1,2\n3\n").unwrap();
    assert_eq!(code(&mvfuse(dir.path(), &["fuse", "--clusters", "2", "ragged.csv"])), 2);

    fs::write(dir.path().join("text.csv"), "1,2\n3,x\n").unwrap();
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "2", "text.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("text.csv"));

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&mvfuse(dir.path(), &["fuse", "--clusters", "2", "empty.csv"])), 2);

    // Unknown flag values are rejected by the parser.
    assert_eq!(code(&mvfuse(dir.path(), &["fuse", "--mode", "xyz", "--clusters", "2", "v1.csv"])), 2);
}

#[test]
fn shape_mismatches_exit_3() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    write_matrix(&dir.path().join("short.csv"), (0..10).map(|i| vec![i as f64]));
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "v1.csv", "short.csv"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));

    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "--lambda", "1,2,3", "v1.csv", "v2.csv"]);
    assert_eq!(code(&out), 3);

    fs::write(dir.path().join("t5.csv"), "0\n1\n2\n0\n1\n").unwrap();
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "--truth", "t5.csv", "v1.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn lambda_override_is_echoed() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    let out = mvfuse(dir.path(), &["fuse", "--clusters", "3", "--lambda", "1,2.5", "v1.csv", "v2.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.config.lambda, vec![1.0, 2.5]);
}

#[test]
fn eval_scores_labels() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("truth.csv"), "0\n0\n1\n1\n2\n2\n").unwrap();
    fs::write(p.join("same.json"), "[0,0,1,1,2,2]").unwrap();
    fs::write(p.join("renamed.json"), r#"{"labels": [7,7,3,3,5,5]}"#).unwrap();
    fs::write(p.join("short.json"), "[0,0,1]").unwrap();
    fs::write(p.join("bad.json"), "[0,-1]").unwrap();

    for file in ["same.json", "renamed.json"] {
        let out = mvfuse(p, &["eval", file, "truth.csv", "--out", "scores.json"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let scores: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        for key in ["nmi", "ari", "acc", "purity"] {
            assert_eq!(scores[key], 1.0, "{file} {key}");
        }
        let saved: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("scores.json")).unwrap()).unwrap();
        assert_eq!(saved, scores);
    }
    assert_eq!(code(&mvfuse(p, &["eval", "short.json", "truth.csv"])), 3);
    assert_eq!(code(&mvfuse(p, &["eval", "bad.json", "truth.csv"])), 2);
    assert_eq!(code(&mvfuse(p, &["eval", "missing.json", "truth.csv"])), 2);
}

#[test]
fn synth_is_reproducible_and_feeds_fuse() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let args = ["synth", "--n", "80", "--clusters", "4", "--views", "3", "--corrupt-views", "2", "--seed", "5"];
    for out_dir in ["a", "b"] {
        let mut full = args.to_vec();
        full.extend(["--out-dir", out_dir]);
        let out = mvfuse(p, &full);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for file in ["view_0.csv", "view_1.csv", "view_2.csv", "truth.csv"] {
        let a = fs::read(p.join("a").join(file)).unwrap();
        assert_eq!(a, fs::read(p.join("b").join(file)).unwrap(), "{file}");
    }
    assert!(!p.join("a/view_3.csv").exists());

    let out = mvfuse(
        p,
        &["fuse", "--views-are", "distances", "--clusters", "4", "--truth", "a/truth.csv", "a/view_0.csv", "a/view_1.csv", "a/view_2.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: RunReport = serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert!(report.metrics.unwrap().nmi > 0.9);
}

#[test]
fn synth_reads_config_and_lets_flags_win() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(
        p.join("spec.toml"),
        "[synth]\nn = 40\nn_clusters = 2\nn_views = 2\np_in = 1.0\np_out = 0.0\ncorrupt_views = []\ncorrupt_rate = 0.0\nseed = 3\n",
    )
    .unwrap();
    let out = mvfuse(p, &["synth", "--config", "spec.toml", "--views", "3", "--out-dir", "d"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(p.join("d/view_2.csv").exists());
    let truth = fs::read_to_string(p.join("d/truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 40);
    let first = fs::read_to_string(p.join("d/view_0.csv")).unwrap();
    assert_eq!(first.lines().count(), 40);
    assert_eq!(first.lines().next().unwrap().split(',').count(), 40);
}

#[test]
fn synth_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(code(&mvfuse(p, &["synth", "--corrupt-rate", "1.5"])), 2);
    assert_eq!(code(&mvfuse(p, &["synth", "--views", "2", "--corrupt-views", "4"])), 2);
    fs::write(p.join("bad.toml"), "[synth]\nn = \"many\"\n").unwrap();
    assert_eq!(code(&mvfuse(p, &["synth", "--config", "bad.toml"])), 2);
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let dir = TempDir::new().unwrap();
    blob_views(dir.path());
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mvfuse"))
            .current_dir(dir.path())
            .env("MVFUSE_THREADS", threads)
            .args(["fuse", "--clusters", "3", "--no-graph", "--out", "t.json", "v1.csv", "v2.csv"])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("lots")), 2);
}
