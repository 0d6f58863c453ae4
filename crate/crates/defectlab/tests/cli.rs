//! Binary-level checks: exit codes, artifact determinism and subcommand
//! plumbing.

use defectlab::data::{write_arff, Dataset, Feature, FeatureKind, FeatureSchema, Row, Value};
use rand::SeedableRng;
use rand_distr::Distribution;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_defectlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn blob_dataset(n_clean: usize, n_defect: usize, seed: u64) -> Dataset {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = rand_distr::Normal::new(0.0, 0.5).unwrap();
    let schema = FeatureSchema {
        relation: "blobs".into(),
        features: vec![
            Feature { name: "x".into(), kind: FeatureKind::Numeric },
            Feature { name: "y".into(), kind: FeatureKind::Numeric },
        ],
        class_name: "cls".into(),
        class_labels: vec!["clean".into(), "defect".into()],
    };
    let mut rows = Vec::new();
    for (center, label, count) in [(-5.0, 0usize, n_clean), (5.0, 1, n_defect)] {
        for _ in 0..count {
            rows.push(Row {
                values: vec![
                    Value::Num(center + noise.sample(&mut rng)),
                    Value::Num(center + noise.sample(&mut rng)),
                ],
                label,
            });
        }
    }
    Dataset::new(schema, rows).unwrap()
}

fn write_blobs(path: &Path, n_clean: usize, n_defect: usize, seed: u64) {
    std::fs::write(path, write_arff(&blob_dataset(n_clean, n_defect, seed))).unwrap();
}

fn config_json(data: &Path, out: &Path) -> String {
    format!(
        r#"{{
            "datasets": [
                {{"path": "{}", "format": "arff", "positive_label": "defect"}}
            ],
            "pipeline": {{
                "balance": {{"b": "max", "family": "gaussian", "seed": 0}},
                "classifier": {{"mode": "fixed_k", "k": 2, "seed": 0}}
            }},
            "cv": {{"folds": 4, "mode": "leak_free"}},
            "seed": 42,
            "output_dir": "{}"
        }}"#,
        data.display(),
        out.display()
    )
}

#[test]
fn run_smoke_test_populates_all_metric_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.arff");
    write_blobs(&data, 12, 8, 1);
    let cfg_path = dir.path().join("config.json");
    let out = dir.path().join("out");
    std::fs::write(&cfg_path, config_json(&data, &out)).unwrap();
    let o = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "dataset,accuracy,precision,recall,f_score,balance,auc,time_seconds");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "blobs");
    // all six metric columns hold parseable numbers
    for f in &fields[1..7] {
        f.parse::<f64>().unwrap_or_else(|_| panic!("unparseable metric '{f}'"));
    }
    assert!(out.join("manifest.json").exists());
    assert!(out.join("summary.md").exists());
}

#[test]
fn run_missing_file_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    let missing = dir.path().join("nope.arff");
    std::fs::write(&cfg_path, config_json(&missing, &dir.path().join("out"))).unwrap();
    let o = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "stderr: {}", stderr(&o));
    assert!(stderr(&o).contains("nope.arff"), "stderr: {}", stderr(&o));
    assert_eq!(stderr(&o).trim().lines().count(), 1);
}

#[test]
fn run_bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, r#"{"datasets": [], "surprise": 1}"#).unwrap();
    let o = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "stderr: {}", stderr(&o));
}

/// Metric fields of the reports must be identical across reruns; wall-clock
/// fields are the only permitted difference.
#[test]
fn reruns_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.arff");
    write_blobs(&data, 12, 8, 2);
    let mut outs = Vec::new();
    for run_dir in ["a", "b"] {
        let out = dir.path().join(run_dir);
        let cfg_path = dir.path().join(format!("config_{run_dir}.json"));
        std::fs::write(&cfg_path, config_json(&data, &out)).unwrap();
        let o = run(&["run", "--config", cfg_path.to_str().unwrap()]);
        assert!(o.status.success(), "stderr: {}", stderr(&o));
        outs.push(out);
    }
    // boxplot data has no timing fields: byte-identical
    assert_eq!(
        std::fs::read(outs[0].join("boxplot.csv")).unwrap(),
        std::fs::read(outs[1].join("boxplot.csv")).unwrap()
    );
    // fold reports: identical after dropping the two trailing time columns
    let strip = |path: &Path| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let fields: Vec<&str> = l.split(',').collect();
                fields[..fields.len() - 2].join(",")
            })
            .collect()
    };
    assert_eq!(
        strip(&outs[0].join("blobs_folds.csv")),
        strip(&outs[1].join("blobs_folds.csv"))
    );
}

#[test]
fn run_check_verifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.arff");
    write_blobs(&data, 12, 8, 3);
    let cfg_path = dir.path().join("config.json");
    let out = dir.path().join("out");
    std::fs::write(&cfg_path, config_json(&data, &out)).unwrap();
    assert!(run(&["run", "--config", cfg_path.to_str().unwrap()]).status.success());
    let ok = run(&["run", "--config", cfg_path.to_str().unwrap(), "--check", "--out", out.to_str().unwrap()]);
    assert!(ok.status.success(), "stderr: {}", stderr(&ok));
    assert!(stdout(&ok).contains("verified"));
    std::fs::write(out.join("summary.csv"), "tampered\n").unwrap();
    let bad = run(&["run", "--config", cfg_path.to_str().unwrap(), "--check", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("hash mismatch"), "stderr: {}", stderr(&bad));
}

#[test]
fn balance_subcommand_writes_b_rows_per_class() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.arff");
    write_blobs(&data, 180, 20, 4);
    let out = dir.path().join("balanced.arff");
    let o = run(&[
        "balance",
        "--input", data.to_str().unwrap(),
        "--b", "30",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let balanced = defectlab::data::parse_arff(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(balanced.class_counts(), vec![30, 30]);
    // input untouched
    assert_eq!(
        defectlab::data::parse_arff(&std::fs::read_to_string(&data).unwrap())
            .unwrap()
            .rows
            .len(),
        200
    );
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blobs.arff");
    write_blobs(&data, 30, 30, 5);
    let model = dir.path().join("model.json");
    let o = run(&[
        "train",
        "--input", data.to_str().unwrap(),
        "--k", "2",
        "--out", model.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));

    let preds = dir.path().join("preds.csv");
    let o = run(&[
        "predict",
        "--input", data.to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--out", preds.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let text = std::fs::read_to_string(&preds).unwrap();
    assert_eq!(text.lines().count(), 61);
    assert!(text.starts_with("row,predicted,score_clean,score_defect"));

    let o = run(&[
        "evaluate",
        "--input", data.to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--positive", "defect",
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let report = stdout(&o);
    for metric in ["accuracy", "precision", "recall", "f_score", "balance", "auc"] {
        assert!(report.contains(metric), "missing {metric} in: {report}");
    }
}

fn results_csv() -> String {
    let mut text = String::from("method,dataset,value\n");
    let groups = [
        ("LR", [0.74, 0.76, 0.78]),
        ("SVM", [0.65, 0.67, 0.70]),
        ("RF", [0.60, 0.62, 0.63]),
        ("ours", [0.70, 0.80, 0.82]),
    ];
    for (method, values) in groups {
        for (i, v) in values.iter().enumerate() {
            text.push_str(&format!("{method},d{i},{v}\n"));
        }
    }
    text
}

#[test]
fn compare_emits_the_omnibus_line_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("results.csv");
    std::fs::write(&input, results_csv()).unwrap();
    let out = dir.path().join("cmp");
    let o = run(&[
        "compare",
        "--input", input.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let line = stdout(&o);
    assert!(line.contains("9.121637"), "{line}");
    assert!(line.contains("df = 3"), "{line}");
    assert!(line.contains("0.027717"), "{line}");
    let md = std::fs::read_to_string(out.join("compare.md")).unwrap();
    for section in ["conover (none)", "conover (holm)", "conover (bh)", "dunn (none)",
                    "nemenyi-tukey (none)", "nemenyi-chisq (none)"] {
        assert!(md.contains(section), "missing section {section}");
    }
    assert!(md.contains("0.007687"), "dunn golden missing:\n{md}");
}

#[test]
fn wdl_subcommand_reports_5_0_0() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("results.csv");
    let mut text = String::from("method,dataset,value\n");
    let ours = [0.989, 1.0, 1.0, 1.0, 0.794];
    let knn = [0.518, 0.538, 0.318, 0.506, 0.323];
    for (i, v) in ours.iter().enumerate() {
        text.push_str(&format!("ours,d{i},{v}\n"));
    }
    for (i, v) in knn.iter().enumerate() {
        text.push_str(&format!("knn_icm,d{i},{v}\n"));
    }
    std::fs::write(&input, text).unwrap();
    let o = run(&["wdl", "--input", input.to_str().unwrap()]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    assert!(stdout(&o).contains("ours vs knn_icm: 5/0/0"), "{}", stdout(&o));
}

#[test]
fn csv_class_column_flag_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.csv");
    std::fs::write(&data, "x,cls,y\n1.0,a,2.0\n2.0,b,1.0\n3.0,a,4.0\n").unwrap();
    let out = dir.path().join("balanced.csv");
    let o = run(&[
        "balance",
        "--input", data.to_str().unwrap(),
        "--format", "csv",
        "--class-column", "cls",
        "--b", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 9, "{text}");
}
