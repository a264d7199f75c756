//! Command-line behavior: exit-code classes, deterministic outputs, config
//! handling and the projection command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_handid")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let output = run(args);
    assert!(
        output.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn generate_small(dir: &Path, performers: u32, seed: u32) -> PathBuf {
    let corpus = dir.join(format!("corpus_p{performers}_s{seed}"));
    run_ok(&[
        "generate",
        "--out",
        corpus.to_str().unwrap(),
        "--performers",
        &performers.to_string(),
        "--gestures",
        "4",
        "--sensors",
        "3",
        "--separation",
        "4.0",
        "--noise",
        "0.4",
        "--seed",
        &seed.to_string(),
    ]);
    corpus
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            );
        }
    }
    out
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("x");
    let cases: Vec<Vec<&str>> = vec![
        vec!["generate", "--performers", "0", "--out", out_dir.to_str().unwrap()],
        vec!["generate", "--gestures", "99", "--out", out_dir.to_str().unwrap()],
    ];
    for args in cases {
        let output = run(&args);
        assert_eq!(output.status.code(), Some(2), "{args:?}");
        assert!(!output.stderr.is_empty());
    }

    let corpus = generate_small(dir.path(), 3, 1);
    let output = run(&[
        "run",
        "--corpus",
        corpus.to_str().unwrap(),
        "--scenario",
        "z",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown scenario"));
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "run",
        "--corpus",
        dir.path().join("missing").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn config_errors_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "corpus = somewhere\nbogus_key = 1\n").unwrap();
    let output = run(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("bogus_key"));

    std::fs::write(&config, "corpus = somewhere\nseed = notanumber\n").unwrap();
    let output = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("seed"));
}

#[test]
fn generate_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_small(dir.path(), 3, 9);
    let b_dir = dir.path().join("again");
    run_ok(&[
        "generate",
        "--out",
        b_dir.to_str().unwrap(),
        "--performers",
        "3",
        "--gestures",
        "4",
        "--sensors",
        "3",
        "--separation",
        "4.0",
        "--noise",
        "0.4",
        "--seed",
        "9",
    ]);
    assert_eq!(dir_bytes(&a), dir_bytes(&b_dir));
}

#[test]
fn run_writes_summary_confusions_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(dir.path(), 3, 2);
    let out = dir.path().join("out");
    let output = run_ok(&[
        "run",
        "--corpus",
        corpus.to_str().unwrap(),
        "--scenario",
        "b",
        "--classifier",
        "knn",
        "--knn-k",
        "1,3",
        "--inner",
        "3",
        "--pca",
        "10",
        "--resample",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);

    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "scenario\tknn");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("b\t"));
    assert!(out.join("confusion_b_knn.csv").exists());
    assert!(!out.join("confusion_b_lda.csv").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("classifiers = knn"));
    assert!(String::from_utf8_lossy(&output.stdout).contains("scenario"));
}

#[test]
fn leakage_modes_complete_and_differ_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(dir.path(), 3, 3);
    let base: Vec<String> = [
        "run",
        "--corpus",
        corpus.to_str().unwrap(),
        "--scenario",
        "b",
        "--classifier",
        "knn",
        "--knn-k",
        "1",
        "--inner",
        "3",
        "--pca",
        "8",
        "--resample",
        "16",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut manifests = Vec::new();
    for mode in ["paper-faithful", "fold-safe"] {
        let out = dir.path().join(mode);
        let mut args = base.clone();
        args.extend(["--mode".to_string(), mode.to_string(), "--out".to_string()]);
        args.push(out.to_str().unwrap().to_string());
        let args_ref: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&args_ref);
        manifests.push(std::fs::read_to_string(out.join("manifest.txt")).unwrap());
    }
    assert!(manifests[0].contains("mode = paper-faithful"));
    assert!(manifests[1].contains("mode = fold-safe"));
}

#[test]
fn scenario_a_all_gestures_reports_per_gesture_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(dir.path(), 3, 4);
    let out = dir.path().join("out");
    run_ok(&[
        "run",
        "--corpus",
        corpus.to_str().unwrap(),
        "--scenario",
        "a",
        "--classifier",
        "knn",
        "--knn-k",
        "1,3",
        "--inner",
        "3",
        "--pca",
        "8",
        "--resample",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    for gesture in 1..=4 {
        assert!(summary.lines().any(|l| l.starts_with(&format!("a{gesture}\t"))), "{summary}");
    }
    assert!(summary.lines().any(|l| l.starts_with("a(mean)\t")), "{summary}");
    assert!(out.join("confusion_a_knn.csv").exists());
}

#[test]
fn project_separates_performers_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(dir.path(), 4, 5);
    let csv_path = dir.path().join("proj.csv");
    run_ok(&[
        "project",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--resample",
        "20",
        "--pca",
        "12",
    ]);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,y,performer,gesture");

    // Parse points per performer.
    let mut per_performer: BTreeMap<u32, Vec<[f64; 2]>> = BTreeMap::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 4);
        let x: f64 = fields[0].parse().unwrap();
        let y: f64 = fields[1].parse().unwrap();
        let performer: u32 = fields[2].parse().unwrap();
        per_performer.entry(performer).or_default().push([x, y]);
    }
    assert_eq!(per_performer.len(), 4);

    // Per-performer centroids must separate further than the pooled
    // within-class standard deviation.
    let centroids: BTreeMap<u32, [f64; 2]> = per_performer
        .iter()
        .map(|(&p, pts)| {
            let n = pts.len() as f64;
            let cx = pts.iter().map(|q| q[0]).sum::<f64>() / n;
            let cy = pts.iter().map(|q| q[1]).sum::<f64>() / n;
            (p, [cx, cy])
        })
        .collect();
    let mut within = 0.0;
    let mut count = 0usize;
    for (p, pts) in &per_performer {
        let c = centroids[p];
        for q in pts {
            within += (q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2);
            count += 1;
        }
    }
    let within_std = (within / count as f64).sqrt();
    let ids: Vec<u32> = centroids.keys().copied().collect();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let ca = centroids[&a];
            let cb = centroids[&b];
            let dist = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
            assert!(
                dist > within_std,
                "performers {a} and {b}: centroid distance {dist:.3} vs within std {within_std:.3}"
            );
        }
    }

    // Repeated runs are byte-identical.
    let again = dir.path().join("proj2.csv");
    run_ok(&[
        "project",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--resample",
        "20",
        "--pca",
        "12",
    ]);
    assert_eq!(std::fs::read(&csv_path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn project_needs_at_least_two_performers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(dir.path(), 1, 6);
    let output = run(&[
        "project",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("p.csv").to_str().unwrap(),
        "--resample",
        "16",
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("at least 2 classes"));
}

#[test]
fn convert_round_trips_through_the_corpus_format() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = generate_small(dir.path(), 2, 7);

    // Re-arrange some generated recordings into the raw layout the converter
    // expects: <performer>/<gesture>/<name>.csv.
    let raw = dir.path().join("raw");
    let index = std::fs::read_to_string(corpus_dir.join("index.csv")).unwrap();
    for (i, line) in index.lines().skip(1).take(8).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let target = raw.join(fields[1]).join(fields[2]);
        std::fs::create_dir_all(&target).unwrap();
        let name = format!("take{i}_{}.csv", fields[3]);
        std::fs::copy(corpus_dir.join(fields[0]), target.join(name)).unwrap();
    }

    // The generated corpus uses 3 sensors; neither real profile matches.
    let converted = dir.path().join("converted");
    let output = run(&[
        "convert",
        "--input",
        raw.to_str().unwrap(),
        "--device",
        "dg5vhand",
        "--out",
        converted.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("sensor count mismatch"));

    let output = run(&["convert", "--input", raw.to_str().unwrap(), "--device", "weird", "--out", converted.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}
