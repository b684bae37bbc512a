//! Feature CSV: header `id,label,<eleven feature names>`, one row per
//! recording. The label column may be empty for unlabeled rows.

use std::io::{Read, Write};

use crate::features::{FeatureVector, FEATURE_NAMES, NUM_FEATURES};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub label: Option<Label>,
    pub values: [f64; NUM_FEATURES],
}

impl FeatureRow {
    pub fn new(id: impl Into<String>, label: Option<Label>, features: &FeatureVector) -> Self {
        Self {
            id: id.into(),
            label,
            values: features.to_array(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("feature CSV schema mismatch: {0}")]
    Schema(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn header() -> Vec<&'static str> {
    let mut h = vec!["id", "label"];
    h.extend(FEATURE_NAMES);
    h
}

pub fn write_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<(), TableError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for row in rows {
        let mut record = vec![
            row.id.clone(),
            row.label.map(|l| l.to_string()).unwrap_or_default(),
        ];
        record.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, TableError> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected = header();
    if found != expected {
        let missing: Vec<&str> = expected
            .iter()
            .copied()
            .filter(|h| !found.iter().any(|f| f == h))
            .collect();
        let detail = if missing.is_empty() {
            format!("expected columns {}", expected.join(","))
        } else {
            format!("missing column(s) {}", missing.join(","))
        };
        return Err(TableError::Schema(detail));
    }

    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let err = |message: String| TableError::Row { row, message };
        let label = match &record[1] {
            "" => None,
            s => Some(s.parse::<Label>().map_err(err)?),
        };
        let mut values = [0.0; NUM_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            let cell = &record[j + 2];
            *v = cell
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    err(format!(
                        "{}: `{cell}` is not a finite number",
                        FEATURE_NAMES[j]
                    ))
                })?;
        }
        rows.push(FeatureRow {
            id: record[0].to_string(),
            label,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, label: Option<Label>, base: f64) -> FeatureRow {
        let mut values = [0.0; NUM_FEATURES];
        for (j, v) in values.iter_mut().enumerate() {
            *v = base + j as f64 * 0.1;
        }
        values[7] = 12.0;
        FeatureRow {
            id: id.into(),
            label,
            values,
        }
    }

    #[test]
    fn round_trip() {
        let rows = vec![
            row("rec0000", Some(Label::Grinding), 0.123456789),
            row("rec0001", None, -1e-7),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,label,kurtosis,abs_mean,variance,entropy,"));
        assert!(text.lines().nth(1).unwrap().contains(",12,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "id,label,kurtosis\nr,grinding,1\n";
        match read_csv(text.as_bytes()) {
            Err(TableError::Schema(msg)) => assert!(msg.contains("abs_mean")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cells() {
        let mut buf = Vec::new();
        write_csv(&[row("a", Some(Label::NoGrinding), 1.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bad = text.replace("no_grinding", "maybe");
        assert!(matches!(
            read_csv(bad.as_bytes()),
            Err(TableError::Row { row: 1, .. })
        ));
        let bad = text.replace(",12,", ",NaN,");
        assert!(matches!(
            read_csv(bad.as_bytes()),
            Err(TableError::Row { .. })
        ));
    }
}
