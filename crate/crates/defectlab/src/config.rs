//! Experiment configuration: a single JSON document describing datasets,
//! the balancing + classifier pipeline, the cross-validation protocol and
//! where reports go. Unknown keys are rejected everywhere so typos fail
//! loudly instead of silently using defaults.

use crate::error::{Error, Result};
use crate::eval::{CvMode, Pipeline};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Arff,
    Csv,
}

/// Which CSV column holds the class; ARFF always uses the last attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassColumnSpec {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DataFormat,
    /// Required for CSV, ignored for ARFF.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_column: Option<ClassColumnSpec>,
    pub positive_label: String,
    /// Report name; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl DatasetSpec {
    pub fn display_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => self
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.path.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSettings {
    pub folds: usize,
    pub mode: CvMode,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Markdown]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub pipeline: Pipeline,
    pub cv: CvSettings,
    /// Master seed; every derived RNG stream is a pure function of it.
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub report_formats: Vec<ReportFormat>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("config: datasets must not be empty".into()));
        }
        for d in &self.datasets {
            if d.format == DataFormat::Csv && d.class_column.is_none() {
                return Err(Error::Config(format!(
                    "config: dataset '{}' is CSV and needs class_column",
                    d.display_name()
                )));
            }
        }
        if self.cv.folds < 2 {
            return Err(Error::Config("config: cv.folds must be >= 2".into()));
        }
        self.pipeline.classifier.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "datasets": [
                {"path": "data/ar5.arff", "format": "arff", "positive_label": "true"}
            ],
            "pipeline": {
                "balance": {"b": "max", "family": "gaussian", "seed": 0},
                "classifier": {"mode": "fixed_k", "k": 3, "seed": 0}
            },
            "cv": {"folds": 10, "mode": "leak_free"},
            "seed": 7,
            "output_dir": "out"
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        assert_eq!(cfg.datasets[0].display_name(), "ar5");
        assert!(cfg.cv.stratified);
        assert_eq!(cfg.report_formats, default_formats());
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let bad = minimal_json().replace("\"seed\": 7", "\"seed\": 7, \"sede\": 1");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn csv_without_class_column_is_rejected() {
        let bad = minimal_json().replace("\"arff\"", "\"csv\"").replace(".arff", ".csv");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("class_column"), "{err}");
    }

    #[test]
    fn class_column_accepts_name_or_index() {
        let by_name: ClassColumnSpec = serde_json::from_str("\"defects\"").unwrap();
        assert_eq!(by_name, ClassColumnSpec::Name("defects".into()));
        let by_index: ClassColumnSpec = serde_json::from_str("4").unwrap();
        assert_eq!(by_index, ClassColumnSpec::Index(4));
    }

    #[test]
    fn too_few_folds_is_rejected() {
        let bad = minimal_json().replace("\"folds\": 10", "\"folds\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }
}
