use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn motionpat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motionpat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, scenario: &str, seed: &str) -> PathBuf {
    let out = motionpat(&["synth", "--scenario", scenario, "--out", s(dir), "--seed", seed]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(format!("{scenario}.csv"))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn help_succeeds_and_bad_usage_fails() {
    assert_eq!(code(&motionpat(&["--help"])), 0);
    assert_eq!(code(&motionpat(&["mine", "--help"])), 0);
    assert_eq!(code(&motionpat(&[])), 1);
    assert_eq!(code(&motionpat(&["mine", "--bogus"])), 1);
}

#[test]
fn merge_scenario_mines_three_patterns() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "merge", "0");
    let out = tmp.path().join("out");
    let run = motionpat(&["mine", "--defaults", "--no-normalize", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let mut reader = csv::Reader::from_path(out.join("patterns.csv")).unwrap();
    let ids: BTreeSet<String> = reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[4] == "false")
        .map(|r| r[3].to_string())
        .collect();
    assert_eq!(ids.len(), 3, "non-noise patterns {ids:?}");
    for name in ["components.csv", "edges.csv", "summary.csv", "overview.svg"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn generated_config_matches_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "diverge", "2");
    let conf = tmp.path().join("diverge.conf");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&motionpat(&["mine", "--config", s(&conf), "--out", s(&a)])), 0);
    assert_eq!(
        code(&motionpat(&["mine", "--defaults", "--no-normalize", "--input", s(&input), "--out", s(&b)])),
        0
    );
    assert_eq!(files(&a), files(&b));
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "arc", "1");
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let run = motionpat(&[
            "mine", "--defaults", "--input", s(&input), "--out", s(&out), "--workers", workers, "--seed", "5",
        ]);
        assert_eq!(code(&run), 0);
        outputs.push(files(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn empty_input_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty.csv");
    for body in ["", "trajectory_id,seq,x,y\n"] {
        fs::write(&input, body).unwrap();
        let run = motionpat(&["mine", "--defaults", "--input", s(&input), "--out", s(tmp.path())]);
        assert_eq!(code(&run), 2, "{}", String::from_utf8_lossy(&run.stderr));
        assert!(String::from_utf8_lossy(&run.stderr).contains("ingest"));
    }
}

#[test]
fn config_problems_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "straight_lane", "0");
    let missing = tmp.path().join("nope.conf");
    assert_eq!(code(&motionpat(&["mine", "--config", s(&missing), "--input", s(&input)])), 1);
    assert_eq!(code(&motionpat(&["mine", "--input", s(&input), "--out", s(tmp.path())])), 1);

    let partial = tmp.path().join("partial.conf");
    fs::write(&partial, "K = 10\nbeta = 45\n").unwrap();
    let run = motionpat(&["mine", "--config", s(&partial), "--input", s(&input), "--out", s(tmp.path())]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("a1"));

    let unknown = tmp.path().join("unknown.conf");
    fs::write(&unknown, "gamma = 3\n").unwrap();
    let run = motionpat(&["mine", "--defaults", "--config", s(&unknown), "--input", s(&input)]);
    assert_eq!(code(&run), 1);

    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "cutoff = 1.5\n").unwrap();
    let run = motionpat(&["mine", "--defaults", "--config", s(&bad), "--input", s(&input), "--out", s(tmp.path())]);
    assert_eq!(code(&run), 1);
}

#[test]
fn too_many_components_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("tiny.csv");
    fs::write(&input, "trajectory_id,seq,x,y\na,0,0,0\na,1,1,0\na,2,2,0\n").unwrap();
    let run = motionpat(&["mine", "--defaults", "--input", s(&input), "--out", s(tmp.path())]);
    assert_eq!(code(&run), 2, "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn signature_command_checks_component_id() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "parallel_lanes", "0");
    let out = tmp.path().join("out");
    let base = ["signature", "--defaults", "--no-normalize", "--input", s(&input), "--out", s(&out)];

    let ok = motionpat(&[&base[..], &["--component-id", "12"]].concat());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("signature_12.svg").exists());

    let bad = motionpat(&[&base[..], &["--component-id", "300"]].concat());
    assert_eq!(code(&bad), 1);
}

#[test]
fn components_command_writes_arrows() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "s_curve", "0");
    let out = tmp.path().join("out");
    let run = motionpat(&["components", "--defaults", "--input", s(&input), "--out", s(&out), "--no-legend"]);
    assert_eq!(code(&run), 0);
    let svg = fs::read_to_string(out.join("components.svg")).unwrap();
    assert_eq!(svg.matches("class=\"component\"").count(), 300);
    assert!(!out.join("patterns.csv").exists());
}

#[test]
fn render_command_writes_only_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "opposite_overlap", "0");
    let out = tmp.path().join("out");
    let run = motionpat(&[
        "render", "--defaults", "--no-normalize", "--input", s(&input), "--out", s(&out), "--canvas", "400",
    ]);
    assert_eq!(code(&run), 0);
    let names: Vec<String> = files(&out).into_keys().collect();
    assert!(names.iter().all(|n| n.ends_with(".svg")), "{names:?}");
    assert!(names.contains(&"overview.svg".to_string()));
    let bad = motionpat(&["render", "--defaults", "--input", s(&input), "--out", s(&out), "--sample-fraction", "0"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn diff_of_identical_epochs_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth(tmp.path(), "merge", "1");
    let out = tmp.path().join("out");
    let run = motionpat(&[
        "diff", "--defaults", "--input", s(&input), "--input2", s(&input), "--out", s(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let mut reader = csv::Reader::from_path(out.join("change_report.csv")).unwrap();
    let statuses: Vec<String> = reader.records().map(|r| r.unwrap()[2].to_string()).collect();
    assert!(!statuses.is_empty());
    assert!(statuses.iter().all(|st| st == "matched"), "{statuses:?}");
}

#[test]
fn unknown_scenario_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let run = motionpat(&["synth", "--scenario", "roundabout", "--out", s(tmp.path())]);
    assert_eq!(code(&run), 1);
}
