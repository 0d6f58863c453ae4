//! Experiment driver: loads each configured dataset, cross-validates the
//! pipeline, and writes reports plus a manifest with SHA-256 hashes of every
//! artifact. Datasets run in parallel; all randomness derives from the
//! config seed so reruns reproduce the same metrics.

use crate::config::{ClassColumnSpec, DataFormat, DatasetSpec, ExperimentConfig, ReportFormat};
use crate::data::{parse_arff, parse_csv, ClassColumn, Dataset};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, CvConfig, CvReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let text = std::fs::read_to_string(&spec.path)
        .map_err(|e| Error::Data(format!("cannot read '{}': {e}", spec.path.display())))?;
    match spec.format {
        DataFormat::Arff => parse_arff(&text),
        DataFormat::Csv => {
            let col = match spec.class_column.as_ref() {
                Some(ClassColumnSpec::Name(n)) => ClassColumn::Name(n.clone()),
                Some(ClassColumnSpec::Index(i)) => ClassColumn::Index(*i),
                None => return Err(Error::Config("CSV dataset needs class_column".into())),
            };
            parse_csv(&text, &col)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Written as `manifest.json` next to the reports. `artifacts` paths are
/// relative to the output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub timings: Vec<StageTiming>,
}

pub struct RunOutcome {
    pub manifest: Manifest,
    pub results: Vec<(String, CvReport)>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write via a temp file in the same directory, then rename, so a crash
/// never leaves a half-written artifact.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_metric).unwrap_or_else(|| "NA".into())
}

/// Per-fold metrics plus an `aggregate` row, one dataset per file.
pub fn folds_csv(report: &CvReport) -> String {
    let mut out = String::from(
        "fold,accuracy,precision,recall,f_score,balance,auc,pd,pf,train_seconds,test_seconds\n",
    );
    let mut row = |label: &str, m: &crate::eval::MetricReport| {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            fmt_metric(m.accuracy),
            fmt_metric(m.precision),
            fmt_metric(m.recall),
            fmt_metric(m.f_score),
            fmt_metric(m.balance),
            fmt_opt(m.auc),
            fmt_metric(m.pd),
            fmt_metric(m.pf),
            m.train_seconds,
            m.test_seconds,
        );
    };
    for (i, m) in report.per_fold.iter().enumerate() {
        row(&i.to_string(), m);
    }
    row("aggregate", &report.aggregate);
    out
}

/// One row per dataset, aggregate metrics only.
pub fn summary_csv(results: &[(String, CvReport)]) -> String {
    let mut out =
        String::from("dataset,accuracy,precision,recall,f_score,balance,auc,time_seconds\n");
    for (name, r) in results {
        let m = &r.aggregate;
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{:.6}",
            fmt_metric(m.accuracy),
            fmt_metric(m.precision),
            fmt_metric(m.recall),
            fmt_metric(m.f_score),
            fmt_metric(m.balance),
            fmt_opt(m.auc),
            m.train_seconds + m.test_seconds,
        );
    }
    out
}

pub fn summary_markdown(results: &[(String, CvReport)]) -> String {
    let mut out = String::from(
        "| Dataset | % Accuracy | Precision | Recall | F-score | Time (s) | ROC Area |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for (name, r) in results {
        let m = &r.aggregate;
        let _ = writeln!(
            out,
            "| {name} | {:.2} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
            m.accuracy * 100.0,
            m.precision,
            m.recall,
            m.f_score,
            m.train_seconds + m.test_seconds,
            m.auc.map(|a| format!("{a:.3}")).unwrap_or_else(|| "NA".into()),
        );
    }
    out
}

/// Long-format per-fold values for box plots: one row per
/// (dataset, fold, metric).
pub fn boxplot_csv(results: &[(String, CvReport)]) -> String {
    let mut out = String::from("dataset,fold,metric,value\n");
    for (name, r) in results {
        for (f, m) in r.per_fold.iter().enumerate() {
            for (metric, v) in [
                ("accuracy", Some(m.accuracy)),
                ("precision", Some(m.precision)),
                ("recall", Some(m.recall)),
                ("f_score", Some(m.f_score)),
                ("balance", Some(m.balance)),
                ("auc", m.auc),
            ] {
                if let Some(v) = v {
                    let _ = writeln!(out, "{name},{f},{metric},{}", fmt_metric(v));
                }
            }
        }
    }
    out
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DEFECTLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("DEFECTLAB_THREADS: invalid value '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Execute the whole experiment and write all artifacts under
/// `config.output_dir`. Returns the manifest and per-dataset reports.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let t_total = Instant::now();
    let pool = thread_pool()?;
    let t_cv = Instant::now();
    let results: Vec<(String, CvReport)> = pool.install(|| {
        config
            .datasets
            .par_iter()
            .map(|spec| {
                let d = load_dataset(spec)?;
                let cv = CvConfig {
                    folds: config.cv.folds,
                    mode: config.cv.mode,
                    stratified: config.cv.stratified,
                    seed: config.seed,
                    positive_label: spec.positive_label.clone(),
                };
                let report = cross_validate(&d, &config.pipeline, &cv)
                    .map_err(|e| Error::Data(format!("{}: {e}", spec.display_name())))?;
                Ok((spec.display_name(), report))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let cv_seconds = t_cv.elapsed().as_secs_f64();

    let t_reports = Instant::now();
    let mut artifacts: Vec<ArtifactEntry> = Vec::new();
    let mut emit = |rel: String, contents: String| -> Result<()> {
        atomic_write(&config.output_dir.join(&rel), &contents)?;
        artifacts.push(ArtifactEntry {
            path: rel,
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    };
    for fmt in &config.report_formats {
        match fmt {
            ReportFormat::Csv => {
                for (name, report) in &results {
                    emit(format!("{name}_folds.csv"), folds_csv(report))?;
                }
                emit("summary.csv".into(), summary_csv(&results))?;
                emit("boxplot.csv".into(), boxplot_csv(&results))?;
            }
            ReportFormat::Markdown => {
                emit("summary.md".into(), summary_markdown(&results))?;
            }
        }
    }
    let report_seconds = t_reports.elapsed().as_secs_f64();

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.clone(),
        artifacts,
        timings: vec![
            StageTiming { stage: "cross_validation".into(), seconds: cv_seconds },
            StageTiming { stage: "reports".into(), seconds: report_seconds },
            StageTiming { stage: "total".into(), seconds: t_total.elapsed().as_secs_f64() },
        ],
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Data(format!("manifest: {e}")))?;
    atomic_write(&config.output_dir.join("manifest.json"), &manifest_json)?;
    Ok(RunOutcome { manifest, results })
}

/// Verify every artifact listed in `manifest.json` against its recorded
/// hash. Returns the list of verified paths.
pub fn check(output_dir: &Path) -> Result<Vec<String>> {
    let manifest_path = output_dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Data(format!("cannot read '{}': {e}", manifest_path.display()))
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("manifest: {e}")))?;
    let mut verified = Vec::new();
    for a in &manifest.artifacts {
        let path = output_dir.join(&a.path);
        let bytes = std::fs::read(&path)
            .map_err(|e| Error::Data(format!("missing artifact '{}': {e}", a.path)))?;
        let actual = sha256_hex(&bytes);
        if actual != a.sha256 {
            return Err(Error::Data(format!(
                "hash mismatch for '{}': manifest {} != actual {}",
                a.path, a.sha256, actual
            )));
        }
        verified.push(a.path.clone());
    }
    Ok(verified)
}
