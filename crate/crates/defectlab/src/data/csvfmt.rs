//! CSV ingestion with RFC-4180-style quoting. The header row is mandatory.
//! Column types are inferred: numeric only if every non-missing cell parses
//! as a number, otherwise nominal with categories in order of first
//! appearance. Empty cells and '?' are missing.

use super::{Dataset, Feature, FeatureKind, FeatureSchema, Row, Value};
use crate::error::{Error, Result};

/// How the caller names the class column.
#[derive(Debug, Clone)]
pub enum ClassColumn {
    Name(String),
    Index(usize),
}

pub fn parse_csv(text: &str, class_column: &ClassColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(Error::Data("empty CSV header".into()));
    }
    let class_idx = match class_column {
        ClassColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("class column '{name}' not found in header")))?,
        ClassColumn::Index(i) => {
            if *i >= header.len() {
                return Err(Error::Data(format!(
                    "class column index {} out of range for {} columns",
                    i,
                    header.len()
                )));
            }
            *i
        }
    };

    let mut cells: Vec<Vec<Option<String>>> = Vec::new();
    for (rec_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            // csv reports ragged rows as UnequalLengths with a position
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rec_no + 2);
            Error::parse(line, format!("{e}"))
        })?;
        let row: Vec<Option<String>> = record
            .iter()
            .map(|c| {
                let c = c.trim();
                if c.is_empty() || c == "?" {
                    None
                } else {
                    Some(c.to_string())
                }
            })
            .collect();
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::Data("CSV has no data rows".into()));
    }

    // class column: no missing allowed, categories in first-appearance order
    let mut class_labels: Vec<String> = Vec::new();
    let mut labels: Vec<usize> = Vec::with_capacity(cells.len());
    for (i, row) in cells.iter().enumerate() {
        let cell = row[class_idx]
            .as_ref()
            .ok_or_else(|| Error::parse(i + 2, "class value may not be missing"))?;
        let idx = match class_labels.iter().position(|c| c == cell) {
            Some(idx) => idx,
            None => {
                class_labels.push(cell.clone());
                class_labels.len() - 1
            }
        };
        labels.push(idx);
    }
    if class_labels.len() < 2 {
        return Err(Error::Data(format!(
            "class column '{}' has fewer than 2 categories",
            header[class_idx]
        )));
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != class_idx).collect();
    let mut features = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let non_missing: Vec<&String> = cells.iter().filter_map(|r| r[j].as_ref()).collect();
        if non_missing.is_empty() {
            return Err(Error::Data(format!("column '{}' is entirely missing", header[j])));
        }
        let numeric = non_missing.iter().all(|c| c.parse::<f64>().is_ok());
        let kind = if numeric {
            FeatureKind::Numeric
        } else {
            let mut cats: Vec<String> = Vec::new();
            for c in non_missing {
                if !cats.iter().any(|x| x == c) {
                    cats.push(c.clone());
                }
            }
            FeatureKind::Nominal(cats)
        };
        features.push(Feature {
            name: header[j].clone(),
            kind,
        });
    }

    let mut rows = Vec::with_capacity(cells.len());
    for (i, row) in cells.iter().enumerate() {
        let mut values = Vec::with_capacity(feature_cols.len());
        for (f, &j) in feature_cols.iter().enumerate() {
            let v = match &row[j] {
                None => Value::Missing,
                Some(cell) => match &features[f].kind {
                    FeatureKind::Numeric => Value::Num(cell.parse::<f64>().expect("inferred numeric")),
                    FeatureKind::Nominal(cats) => {
                        Value::Cat(cats.iter().position(|c| c == cell).expect("collected above"))
                    }
                },
            };
            values.push(v);
        }
        rows.push(Row {
            values,
            label: labels[i],
        });
    }

    let schema = FeatureSchema {
        relation: "csv".into(),
        features,
        class_name: header[class_idx].clone(),
        class_labels,
    };
    Dataset::new(schema, rows)
}

/// Serialize as CSV (header row, LF line endings, class column last).
pub fn write_csv(d: &Dataset) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header: Vec<String> = d.schema.features.iter().map(|f| f.name.clone()).collect();
    header.push(d.schema.class_name.clone());
    wtr.write_record(&header).expect("write to Vec");
    for row in &d.rows {
        let mut cells: Vec<String> = Vec::with_capacity(row.values.len() + 1);
        for (j, v) in row.values.iter().enumerate() {
            cells.push(match v {
                Value::Num(x) => format!("{x}"),
                Value::Cat(c) => match &d.schema.features[j].kind {
                    FeatureKind::Nominal(cats) => cats[*c].clone(),
                    FeatureKind::Numeric => unreachable!("categorical value in numeric feature"),
                },
                Value::Missing => "?".to_string(),
            });
        }
        cells.push(d.schema.class_labels[row.label].clone());
        wtr.write_record(&cells).expect("write to Vec");
    }
    String::from_utf8(wtr.into_inner().expect("flush to Vec")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_numeric_feature() {
        let d = parse_csv("a,cls\n1,yes\n2,no\n3,yes\n", &ClassColumn::Name("cls".into())).unwrap();
        assert_eq!(d.schema.features[0].kind, FeatureKind::Numeric);
        assert_eq!(d.schema.class_labels, vec!["yes", "no"]);
        assert_eq!(d.class_counts(), vec![2, 1]);
    }

    #[test]
    fn ragged_row_reports_position() {
        let err = parse_csv("a,cls\n1,yes\n2,no,extra\n", &ClassColumn::Name("cls".into())).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn mixed_column_becomes_nominal() {
        let d = parse_csv("a,cls\n1,y\n2,n\nx,y\n", &ClassColumn::Name("cls".into())).unwrap();
        match &d.schema.features[0].kind {
            FeatureKind::Nominal(cats) => assert_eq!(cats, &["1", "2", "x"]),
            other => panic!("expected nominal, got {other:?}"),
        }
    }

    #[test]
    fn missing_class_column_is_an_error() {
        let err = parse_csv("a,b\n1,2\n", &ClassColumn::Name("cls".into())).unwrap_err();
        assert!(err.to_string().contains("cls"));
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let err = parse_csv("a,cls\n?,y\n,n\n", &ClassColumn::Name("cls".into())).unwrap_err();
        assert!(err.to_string().contains("entirely missing"));
    }

    #[test]
    fn empty_and_question_mark_are_missing() {
        let d = parse_csv("a,b,cls\n1,,y\n2,?,n\n3,5,y\n", &ClassColumn::Name("cls".into())).unwrap();
        assert_eq!(d.rows[0].values[1], Value::Missing);
        assert_eq!(d.rows[1].values[1], Value::Missing);
        assert_eq!(d.rows[2].values[1], Value::Num(5.0));
    }

    #[test]
    fn class_by_index_and_round_trip() {
        let d = parse_csv("cls,a\ny,1\nn,2\n", &ClassColumn::Index(0)).unwrap();
        assert_eq!(d.schema.class_name, "cls");
        // writer puts the class last; re-parse by name
        let text = write_csv(&d);
        let d2 = parse_csv(&text, &ClassColumn::Name("cls".into())).unwrap();
        assert_eq!(d.rows, d2.rows);
    }
}
