//! Dataset representation, missing-value imputation and nominal-to-binary
//! encoding.
//!
//! `Dataset` is the schema-aware form produced by the parsers; `EncodedDataset`
//! is the dense numeric form consumed by the balancer and the classifier.
//! All types are immutable after construction.

mod arff;
mod csvfmt;

pub use arff::{parse_arff, write_arff};
pub use csvfmt::{parse_csv, write_csv, ClassColumn};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Attribute kind: continuous or a fixed category list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered feature list plus the class attribute (kept separate from the
/// features; the class is always nominal with at least two categories).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub relation: String,
    pub features: Vec<Feature>,
    pub class_name: String,
    pub class_labels: Vec<String>,
}

impl FeatureSchema {
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.push(&self.class_name);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::Data("duplicate attribute names in schema".into()));
        }
        if self.class_labels.len() < 2 {
            return Err(Error::Data(format!(
                "class attribute '{}' needs at least 2 categories, has {}",
                self.class_name,
                self.class_labels.len()
            )));
        }
        for f in &self.features {
            if let FeatureKind::Nominal(cats) = &f.kind {
                if cats.is_empty() {
                    return Err(Error::Data(format!(
                        "nominal feature '{}' has no categories",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Cell value. Missing is an explicit state, never a sentinel number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(usize),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<Value>,
    /// Index into `schema.class_labels`; always present.
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<Row>) -> Result<Self> {
        schema.validate()?;
        let arity = schema.features.len();
        for (i, row) in rows.iter().enumerate() {
            if row.values.len() != arity {
                return Err(Error::Data(format!(
                    "row {} has {} values, schema has {} features",
                    i,
                    row.values.len(),
                    arity
                )));
            }
            if row.label >= schema.class_labels.len() {
                return Err(Error::Data(format!("row {} class index out of range", i)));
            }
            for (j, v) in row.values.iter().enumerate() {
                if let (Value::Cat(c), FeatureKind::Nominal(cats)) = (v, &schema.features[j].kind) {
                    if *c >= cats.len() {
                        return Err(Error::Data(format!(
                            "row {} feature '{}' category index {} out of range",
                            i, schema.features[j].name, c
                        )));
                    }
                }
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of rows per class label, indexed like `schema.class_labels`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.schema.class_labels.len()];
        for row in &self.rows {
            counts[row.label] += 1;
        }
        counts
    }
}

/// Per-feature statistics used for global imputation. Fitting on a subset of
/// rows and applying to others is what keeps the leak-free evaluation mode
/// honest.
#[derive(Debug, Clone)]
pub struct ImputeStats {
    /// Numeric features: mean over non-missing values (0 if all missing).
    /// Nominal features: modal category (ties → lowest index; 0 if all missing).
    fills: Vec<Value>,
}

impl ImputeStats {
    pub fn fit(d: &Dataset) -> Self {
        Self::fit_rows(d, &(0..d.rows.len()).collect::<Vec<_>>())
    }

    pub fn fit_rows(d: &Dataset, row_indices: &[usize]) -> Self {
        let mut fills = Vec::with_capacity(d.schema.features.len());
        for (j, feat) in d.schema.features.iter().enumerate() {
            let fill = match &feat.kind {
                FeatureKind::Numeric => {
                    let mut sum = 0.0;
                    let mut n = 0usize;
                    for &i in row_indices {
                        if let Value::Num(x) = d.rows[i].values[j] {
                            sum += x;
                            n += 1;
                        }
                    }
                    Value::Num(if n > 0 { sum / n as f64 } else { 0.0 })
                }
                FeatureKind::Nominal(cats) => {
                    let mut counts = vec![0usize; cats.len()];
                    for &i in row_indices {
                        if let Value::Cat(c) = d.rows[i].values[j] {
                            counts[c] += 1;
                        }
                    }
                    // ties resolve to the lowest category index
                    let mode = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(c, _)| c)
                        .unwrap_or(0);
                    Value::Cat(mode)
                }
            };
            fills.push(fill);
        }
        ImputeStats { fills }
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let rows = d
            .rows
            .iter()
            .map(|row| Row {
                values: row
                    .values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if v.is_missing() { self.fills[j] } else { *v })
                    .collect(),
                label: row.label,
            })
            .collect();
        Dataset {
            schema: d.schema.clone(),
            rows,
        }
    }
}

/// Replace every MISSING cell using whole-dataset statistics: feature mean for
/// numeric attributes, modal category for nominal ones.
pub fn impute_global(d: &Dataset) -> Dataset {
    ImputeStats::fit(d).apply(d)
}

/// Where an encoded column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnSource {
    /// Copied numeric feature.
    Numeric { feature: usize },
    /// Two-category nominal collapsed to a single 0/1 column
    /// (category index 1 → 1.0).
    Binary { feature: usize },
    /// One column of a k>2 one-hot group.
    OneHot { feature: usize, category: usize },
}

impl ColumnSource {
    pub fn feature(&self) -> usize {
        match self {
            ColumnSource::Numeric { feature }
            | ColumnSource::Binary { feature }
            | ColumnSource::OneHot { feature, .. } => *feature,
        }
    }
}

/// Dense numeric form: one row per instance, labels kept alongside, and a
/// column map permitting schema-aware inverse lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub schema: FeatureSchema,
    pub columns: Vec<ColumnSource>,
    /// Row-major, `labels.len()` rows by `columns.len()` columns.
    pub matrix: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl EncodedDataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Contiguous one-hot column ranges, one per k>2 nominal feature.
    pub fn one_hot_groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut groups = Vec::new();
        let mut i = 0;
        while i < self.columns.len() {
            if let ColumnSource::OneHot { feature, .. } = self.columns[i] {
                let start = i;
                while i < self.columns.len()
                    && matches!(self.columns[i], ColumnSource::OneHot { feature: f, .. } if f == feature)
                {
                    i += 1;
                }
                groups.push(start..i);
            } else {
                i += 1;
            }
        }
        groups
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.schema.class_labels.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row subset, preserving order of `indices`.
    pub fn select(&self, indices: &[usize]) -> EncodedDataset {
        EncodedDataset {
            schema: self.schema.clone(),
            columns: self.columns.clone(),
            matrix: indices.iter().map(|&i| self.matrix[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Convert an imputed dataset to its dense numeric form. Numeric features are
/// copied, two-category nominals become a single 0/1 column, k>2 nominals
/// become k one-hot columns.
pub fn encode(d: &Dataset) -> Result<EncodedDataset> {
    let mut columns = Vec::new();
    for (j, feat) in d.schema.features.iter().enumerate() {
        match &feat.kind {
            FeatureKind::Numeric => columns.push(ColumnSource::Numeric { feature: j }),
            FeatureKind::Nominal(cats) if cats.len() <= 2 => {
                columns.push(ColumnSource::Binary { feature: j })
            }
            FeatureKind::Nominal(cats) => {
                for c in 0..cats.len() {
                    columns.push(ColumnSource::OneHot {
                        feature: j,
                        category: c,
                    });
                }
            }
        }
    }
    let mut matrix = Vec::with_capacity(d.rows.len());
    let mut labels = Vec::with_capacity(d.rows.len());
    for (i, row) in d.rows.iter().enumerate() {
        let mut out = Vec::with_capacity(columns.len());
        for col in &columns {
            let j = col.feature();
            let v = row.values[j];
            if v.is_missing() {
                return Err(Error::Data(format!(
                    "cannot encode: feature '{}' is missing at row {} (impute first)",
                    d.schema.features[j].name, i
                )));
            }
            let x = match (col, v) {
                (ColumnSource::Numeric { .. }, Value::Num(x)) => x,
                (ColumnSource::Binary { .. }, Value::Cat(c)) => {
                    if c == 1 {
                        1.0
                    } else {
                        0.0
                    }
                }
                (ColumnSource::OneHot { category, .. }, Value::Cat(c)) => {
                    if c == *category {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "type mismatch at row {} feature '{}'",
                        i, d.schema.features[j].name
                    )))
                }
            };
            out.push(x);
        }
        matrix.push(out);
        labels.push(row.label);
    }
    Ok(EncodedDataset {
        schema: d.schema.clone(),
        columns,
        matrix,
        labels,
    })
}

/// Inverse of `encode` for writing generated data back out. Binary columns
/// threshold at 0.5; one-hot groups take the argmax category.
pub fn decode(e: &EncodedDataset) -> Result<Dataset> {
    let n_features = e.schema.features.len();
    let mut rows = Vec::with_capacity(e.n_rows());
    for (i, enc_row) in e.matrix.iter().enumerate() {
        let mut values = vec![Value::Missing; n_features];
        let mut best: Vec<Option<(usize, f64)>> = vec![None; n_features];
        for (c, col) in e.columns.iter().enumerate() {
            let x = enc_row[c];
            match col {
                ColumnSource::Numeric { feature } => values[*feature] = Value::Num(x),
                ColumnSource::Binary { feature } => {
                    values[*feature] = Value::Cat(usize::from(x >= 0.5))
                }
                ColumnSource::OneHot { feature, category } => {
                    let better = match best[*feature] {
                        None => true,
                        Some((_, bx)) => x > bx,
                    };
                    if better {
                        best[*feature] = Some((*category, x));
                    }
                }
            }
        }
        for (j, b) in best.iter().enumerate() {
            if let Some((cat, _)) = b {
                values[j] = Value::Cat(*cat);
            }
        }
        rows.push(Row {
            values,
            label: e.labels[i],
        });
    }
    Dataset::new(e.schema.clone(), rows)
        .map_err(|err| Error::Data(format!("decode produced invalid dataset: {err}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_numeric(n: usize) -> FeatureSchema {
        FeatureSchema {
            relation: "t".into(),
            features: (0..n)
                .map(|i| Feature {
                    name: format!("f{i}"),
                    kind: FeatureKind::Numeric,
                })
                .collect(),
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        }
    }

    #[test]
    fn impute_numeric_mean() {
        let schema = schema_numeric(1);
        let rows = vec![
            Row { values: vec![Value::Num(1.0)], label: 0 },
            Row { values: vec![Value::Missing], label: 0 },
            Row { values: vec![Value::Num(3.0)], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let out = impute_global(&d);
        assert_eq!(out.rows[1].values[0], Value::Num(2.0));
    }

    #[test]
    fn impute_nominal_mode() {
        let schema = FeatureSchema {
            relation: "t".into(),
            features: vec![Feature {
                name: "f".into(),
                kind: FeatureKind::Nominal(vec!["a".into(), "b".into()]),
            }],
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Cat(0)], label: 0 },
            Row { values: vec![Value::Cat(0)], label: 0 },
            Row { values: vec![Value::Cat(1)], label: 0 },
            Row { values: vec![Value::Missing], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let out = impute_global(&d);
        assert_eq!(out.rows[3].values[0], Value::Cat(0));
    }

    #[test]
    fn impute_mode_tie_goes_to_lowest_index() {
        let schema = FeatureSchema {
            relation: "t".into(),
            features: vec![Feature {
                name: "f".into(),
                kind: FeatureKind::Nominal(vec!["a".into(), "b".into(), "c".into()]),
            }],
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Cat(2)], label: 0 },
            Row { values: vec![Value::Cat(1)], label: 0 },
            Row { values: vec![Value::Missing], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let out = impute_global(&d);
        assert_eq!(out.rows[2].values[0], Value::Cat(1));
    }

    #[test]
    fn impute_all_missing_feature_defaults() {
        let schema = schema_numeric(1);
        let rows = vec![
            Row { values: vec![Value::Missing], label: 0 },
            Row { values: vec![Value::Missing], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let out = impute_global(&d);
        assert_eq!(out.rows[0].values[0], Value::Num(0.0));
    }

    #[test]
    fn impute_is_identity_without_missing() {
        let schema = schema_numeric(2);
        let rows = vec![Row {
            values: vec![Value::Num(1.0), Value::Num(2.0)],
            label: 1,
        }];
        let d = Dataset::new(schema, rows).unwrap();
        assert_eq!(impute_global(&d), d);
    }

    #[test]
    fn impute_is_idempotent() {
        let schema = schema_numeric(1);
        let rows = vec![
            Row { values: vec![Value::Num(1.0)], label: 0 },
            Row { values: vec![Value::Missing], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let once = impute_global(&d);
        assert_eq!(impute_global(&once), once);
    }

    #[test]
    fn encode_numeric_identity() {
        let schema = schema_numeric(2);
        let rows = vec![Row {
            values: vec![Value::Num(1.5), Value::Num(-2.0)],
            label: 0,
        }];
        let d = Dataset::new(schema, rows).unwrap();
        let e = encode(&d).unwrap();
        assert_eq!(e.n_cols(), 2);
        assert_eq!(e.matrix[0], vec![1.5, -2.0]);
    }

    #[test]
    fn encode_binary_nominal_single_column() {
        let schema = FeatureSchema {
            relation: "t".into(),
            features: vec![Feature {
                name: "f".into(),
                kind: FeatureKind::Nominal(vec!["false".into(), "true".into()]),
            }],
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        };
        let rows = vec![Row { values: vec![Value::Cat(1)], label: 0 }];
        let d = Dataset::new(schema, rows).unwrap();
        let e = encode(&d).unwrap();
        assert_eq!(e.n_cols(), 1);
        assert_eq!(e.matrix[0], vec![1.0]);
    }

    #[test]
    fn encode_three_category_one_hot() {
        let schema = FeatureSchema {
            relation: "t".into(),
            features: vec![Feature {
                name: "f".into(),
                kind: FeatureKind::Nominal(vec!["a".into(), "b".into(), "c".into()]),
            }],
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Cat(0)], label: 0 },
            Row { values: vec![Value::Cat(2)], label: 1 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let e = encode(&d).unwrap();
        assert_eq!(e.n_cols(), 3);
        assert_eq!(e.matrix[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(e.matrix[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(e.one_hot_groups(), vec![0..3]);
    }

    #[test]
    fn encode_rejects_missing() {
        let schema = schema_numeric(1);
        let rows = vec![Row { values: vec![Value::Missing], label: 0 }];
        let d = Dataset::new(schema, rows).unwrap();
        let err = encode(&d).unwrap_err();
        assert!(err.to_string().contains("f0"));
    }

    #[test]
    fn decode_inverts_encode() {
        let schema = FeatureSchema {
            relation: "t".into(),
            features: vec![
                Feature { name: "x".into(), kind: FeatureKind::Numeric },
                Feature {
                    name: "f".into(),
                    kind: FeatureKind::Nominal(vec!["a".into(), "b".into(), "c".into()]),
                },
            ],
            class_name: "cls".into(),
            class_labels: vec!["no".into(), "yes".into()],
        };
        let rows = vec![
            Row { values: vec![Value::Num(3.5), Value::Cat(1)], label: 1 },
            Row { values: vec![Value::Num(-1.0), Value::Cat(2)], label: 0 },
        ];
        let d = Dataset::new(schema, rows).unwrap();
        let back = decode(&encode(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
