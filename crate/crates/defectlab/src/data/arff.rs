//! ARFF reader/writer. Supports the subset the NASA/PROMISE distributions
//! use: '%' comment lines, `numeric`/`real`/`integer` and brace-list nominal
//! attributes, '?' for missing values, case-insensitive keywords. The last
//! declared attribute is the class.

use super::{Dataset, Feature, FeatureKind, FeatureSchema, Row, Value};
use crate::error::{Error, Result};
use std::fmt::Write as _;

pub fn parse_arff(text: &str) -> Result<Dataset> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Feature> = Vec::new();
    let mut schema: Option<FeatureSchema> = None;
    let mut rows: Vec<Row> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if schema.is_none() {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                relation = Some(line["@relation".len()..].trim().trim_matches('\'').to_string());
            } else if lower.starts_with("@attribute") {
                attributes.push(parse_attribute(line, line_no)?);
            } else if lower.starts_with("@data") {
                if relation.is_none() {
                    return Err(Error::parse(line_no, "@data before @relation"));
                }
                if attributes.len() < 2 {
                    return Err(Error::parse(
                        line_no,
                        "need at least one feature attribute plus a class attribute",
                    ));
                }
                let class = attributes.pop().expect("checked length above");
                let class_labels = match class.kind {
                    FeatureKind::Nominal(cats) => cats,
                    FeatureKind::Numeric => {
                        return Err(Error::parse(
                            line_no,
                            format!("class attribute '{}' must be nominal", class.name),
                        ))
                    }
                };
                schema = Some(FeatureSchema {
                    relation: relation.clone().expect("checked above"),
                    features: std::mem::take(&mut attributes),
                    class_name: class.name,
                    class_labels,
                });
            } else {
                return Err(Error::parse(line_no, format!("unexpected header line: {line}")));
            }
        } else {
            let s = schema.as_ref().expect("in data section");
            rows.push(parse_data_row(line, line_no, s)?);
        }
    }
    let schema = schema.ok_or_else(|| Error::parse(text.lines().count(), "missing @data section"))?;
    if rows.is_empty() {
        return Err(Error::Data("empty data section".into()));
    }
    Dataset::new(schema, rows)
}

fn parse_data_row(line: &str, line_no: usize, schema: &FeatureSchema) -> Result<Row> {
    let cells: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = schema.features.len() + 1;
    if cells.len() != expected {
        return Err(Error::parse(
            line_no,
            format!("row has {} values, expected {}", cells.len(), expected),
        ));
    }
    let mut values = Vec::with_capacity(schema.features.len());
    for (j, cell) in cells[..schema.features.len()].iter().enumerate() {
        let cell = cell.trim_matches('\'');
        if cell == "?" {
            values.push(Value::Missing);
            continue;
        }
        let v = match &schema.features[j].kind {
            FeatureKind::Numeric => Value::Num(cell.parse::<f64>().map_err(|_| {
                Error::parse(
                    line_no,
                    format!("'{}' is not numeric for attribute '{}'", cell, schema.features[j].name),
                )
            })?),
            FeatureKind::Nominal(cats) => {
                let idx = cats.iter().position(|c| c == cell).ok_or_else(|| {
                    Error::parse(
                        line_no,
                        format!("undeclared category '{}' for attribute '{}'", cell, schema.features[j].name),
                    )
                })?;
                Value::Cat(idx)
            }
        };
        values.push(v);
    }
    let class_cell = cells[expected - 1].trim_matches('\'');
    if class_cell == "?" {
        return Err(Error::parse(line_no, "class value may not be missing"));
    }
    let label = schema
        .class_labels
        .iter()
        .position(|c| c == class_cell)
        .ok_or_else(|| Error::parse(line_no, format!("undeclared class label '{class_cell}'")))?;
    Ok(Row { values, label })
}

fn parse_attribute(line: &str, line_no: usize) -> Result<Feature> {
    let rest = line["@attribute".len()..].trim();
    let (name, spec) = if let Some(stripped) = rest.strip_prefix('\'') {
        let end = stripped
            .find('\'')
            .ok_or_else(|| Error::parse(line_no, "unterminated quoted attribute name"))?;
        (stripped[..end].to_string(), stripped[end + 1..].trim())
    } else {
        let mut parts = rest.splitn(2, char::is_whitespace);
        let name = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(line_no, "missing attribute name"))?;
        (name.to_string(), parts.next().unwrap_or("").trim())
    };
    if spec.is_empty() {
        return Err(Error::parse(line_no, format!("attribute '{name}' has no type")));
    }
    let kind = if spec.starts_with('{') {
        let inner = spec
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::parse(line_no, "malformed nominal category list"))?;
        let cats: Vec<String> = inner
            .split(',')
            .map(|c| c.trim().trim_matches('\'').to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if cats.is_empty() {
            return Err(Error::parse(line_no, format!("attribute '{name}' has an empty category list")));
        }
        FeatureKind::Nominal(cats)
    } else {
        match spec.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => FeatureKind::Numeric,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported attribute type '{other}' for '{name}'"),
                ))
            }
        }
    };
    Ok(Feature { name, kind })
}

/// Serialize a dataset to ARFF text with LF line endings. Numeric values use
/// the shortest round-trip representation, so `parse_arff(write_arff(d)) == d`.
pub fn write_arff(d: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {}", d.schema.relation);
    for f in &d.schema.features {
        match &f.kind {
            FeatureKind::Numeric => {
                let _ = writeln!(out, "@attribute {} numeric", f.name);
            }
            FeatureKind::Nominal(cats) => {
                let _ = writeln!(out, "@attribute {} {{{}}}", f.name, cats.join(","));
            }
        }
    }
    let _ = writeln!(
        out,
        "@attribute {} {{{}}}",
        d.schema.class_name,
        d.schema.class_labels.join(",")
    );
    let _ = writeln!(out, "@data");
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
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
