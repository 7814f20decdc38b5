//! CSV datasets: a header row, numeric feature columns and an optional label
//! column.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::classifier::{Label, TrainingSet};
use crate::error::{Error, Result};
use crate::linear_scan::Dataset;
use crate::metrics::MetricKind;

/// Which columns to read.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvSchema {
    /// Column holding class labels; `None` reads an unlabeled dataset.
    pub label_column: Option<String>,
    /// Feature columns to keep, in order; `None` keeps every non-label column.
    pub feature_columns: Option<Vec<String>>,
    pub metric: MetricKind,
}

impl CsvSchema {
    pub fn labeled(column: impl Into<String>) -> Self {
        CsvSchema {
            label_column: Some(column.into()),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    /// Original label strings when the label column was not numeric;
    /// `label_names[l - 1]` is the text of label `l`.
    pub label_names: Option<Vec<String>>,
}

impl LoadedCsv {
    pub fn into_training_set(self) -> Result<TrainingSet> {
        TrainingSet::new(self.dataset)
    }
}

/// Reads a CSV file.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), schema)
}

/// Reads CSV from any reader; `source` names it in error messages.
///
/// Labels that all parse as positive integers are used as-is. Otherwise the
/// distinct label strings are sorted and numbered from 1.
pub fn read_csv<R: Read>(input: R, source: &str, schema: &CsvSchema) -> Result<LoadedCsv> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.into(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("no column named {name:?}")))
    };
    let label_col = schema.label_column.as_deref().map(find).transpose()?;
    let feature_cols: Vec<usize> = match &schema.feature_columns {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&i| Some(i) != label_col).collect(),
    };
    if feature_cols.is_empty() {
        return Err(parse_err(1, "no feature columns".into()));
    }

    let mut flat = Vec::new();
    let mut raw_labels = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for &c in &feature_cols {
            let v: f64 = rec[c]
                .parse()
                .map_err(|_| parse_err(line, format!("column {:?}: {:?} is not a number", header[c], &rec[c])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {:?}: value is not finite", header[c])));
            }
            flat.push(v);
        }
        if let Some(c) = label_col {
            raw_labels.push((line, rec[c].to_string()));
        }
    }
    if flat.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut dataset = Dataset::from_flat(flat, feature_cols.len(), schema.metric)?;

    let mut label_names = None;
    if label_col.is_some() {
        let numeric: Option<Vec<Label>> = raw_labels
            .iter()
            .map(|(_, s)| s.parse::<u32>().ok().and_then(|v| Label::new(v).ok()))
            .collect();
        let labels = match numeric {
            Some(l) => l,
            None => {
                if let Some((line, _)) = raw_labels.iter().find(|(_, s)| s.is_empty()) {
                    return Err(parse_err(*line, "empty label".into()));
                }
                let names: Vec<String> = raw_labels
                    .iter()
                    .map(|(_, s)| s.clone())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let labels = raw_labels
                    .iter()
                    .map(|(_, s)| Label::new(names.binary_search(s).expect("present") as u32 + 1))
                    .collect::<Result<_>>()?;
                label_names = Some(names);
                labels
            }
        };
        dataset = dataset.set_labels(labels)?;
    }

    Ok(LoadedCsv {
        dataset,
        feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
        label_names,
    })
}

/// Writes a dataset as CSV. Features are named `feature_names` or `f1..fd`;
/// labels, when present, go to a trailing `label_column`.
pub fn write_csv<W: Write>(ds: &Dataset, out: W, feature_names: Option<&[String]>, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::param(format!("csv write failed: {e}"));
    let mut header: Vec<String> = match feature_names {
        Some(names) if names.len() == ds.dim() => names.to_vec(),
        Some(_) => return Err(Error::param("one name per feature required")),
        None => (1..=ds.dim()).map(|i| format!("f{i}")).collect(),
    };
    if ds.labels().is_some() {
        header.push(label_column.to_string());
    }
    w.write_record(&header).map_err(wrap)?;
    for (i, row) in ds.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = ds.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))
}
