//! Reading and writing datasets, plus the preprocessing steps of the
//! real-data pipelines.
//!
//! Files are comma-separated UTF-8 with a header row and `.` as the decimal
//! separator. Floats are written with Rust's shortest round-trip formatting, so
//! reading a written file gives back bit-identical values. Row numbers in
//! errors are 1-based line numbers of the file, counting the header as line 1.

mod kmers;
mod manifest;
mod prep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub use kmers::{featurize_kmers, kmer_count, kmer_names};
pub use manifest::{sha256_file, InputDigest, RunManifest};
pub use prep::{
    group_by_feature, group_by_key, group_by_label_quantiles, normalize_labels, split_train_test,
    LabelScaling, SplitDataset,
};

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;

/// A rectangular numeric table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub source: PathBuf,
    pub columns: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

/// Features and labels pulled out of a table, with column names kept.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub label_name: String,
}

/// Name of the column appended by [`NumericTable::labeled`] when an
/// intercept is requested.
pub const INTERCEPT_COLUMN: &str = "intercept";

impl NumericTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format {
                path: self.source.clone(),
                message: format!("no column named {name:?} (columns: {})", self.columns.join(", ")),
            })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.columns.len();
        self.data.iter().skip(j).step_by(d).copied().collect()
    }

    /// Splits off `label` as `y`; every other column becomes a feature, in file order.
    pub fn labeled(&self, label: &str, intercept: bool) -> Result<LabeledData> {
        let li = self.column_index(label)?;
        let d = self.columns.len();
        if d < 2 && !intercept {
            return Err(Error::Format {
                path: self.source.clone(),
                message: "need at least one feature column besides the label".into(),
            });
        }
        let mut feature_names: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != li)
            .map(|(_, c)| c.clone())
            .collect();
        let mut x = if d > 1 {
            let data = self
                .data
                .chunks_exact(d)
                .flat_map(|row| row.iter().enumerate().filter(|(j, _)| *j != li).map(|(_, v)| *v))
                .collect();
            Some(DesignMatrix::new(self.rows, d - 1, data)?)
        } else {
            None
        };
        if intercept {
            feature_names.push(INTERCEPT_COLUMN.into());
            x = Some(match x {
                Some(m) => m.with_intercept(),
                None => DesignMatrix::new(self.rows, 1, vec![1.0; self.rows])?,
            });
        }
        Ok(LabeledData {
            x: x.expect("at least one feature column"),
            y: self.column(li),
            feature_names,
            label_name: label.to_string(),
        })
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let header = reader.headers().map_err(|e| Error::csv(path, e))?;
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(Error::Format {
            path: path.into(),
            message: "missing header row".into(),
        });
    }
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(Error::Format {
            path: path.into(),
            message: format!("duplicate column name {:?}", dup.1),
        });
    }
    Ok(names)
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

fn parse_number(path: &Path, line: usize, column: &str, cell: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.into(),
        row: line,
        column: column.into(),
        message: format!("expected a number, found {cell:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.into(),
            row: line,
            column: column.into(),
            message: format!("non-finite value {cell:?}"),
        });
    }
    Ok(value)
}

/// Reads a header plus all-numeric rows.
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<NumericTable> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let columns = headers(path, &mut reader)?;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&record, i + 2);
        if record.len() != columns.len() {
            return Err(Error::Parse {
                path: path.into(),
                row: line,
                column: String::new(),
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        for (cell, name) in record.iter().zip(&columns) {
            data.push(parse_number(path, line, name, cell)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Format {
            path: path.into(),
            message: "no data rows".into(),
        });
    }
    Ok(NumericTable {
        source: path.into(),
        columns,
        rows,
        data,
    })
}

/// Sequences and labels from a `sequence,label` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTable {
    pub source: PathBuf,
    pub sequences: Vec<String>,
    pub labels: Vec<f64>,
}

/// Reads a file with `sequence` and `label` columns (any order, extra columns
/// ignored). Sequences are upper-cased and checked against `ACGT`.
pub fn read_sequence_csv(path: impl AsRef<Path>) -> Result<SequenceTable> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let columns = headers(path, &mut reader)?;
    let find = |name: &str| {
        columns.iter().position(|c| c == name).ok_or_else(|| Error::Format {
            path: path.into(),
            message: format!("sequence file needs a {name:?} column"),
        })
    };
    let (si, li) = (find("sequence")?, find("label")?);
    let mut sequences = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&record, i + 2);
        let seq = record.get(si).unwrap_or("").trim().to_ascii_uppercase();
        if seq.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                row: line,
                column: "sequence".into(),
                message: "empty sequence".into(),
            });
        }
        if let Some((pos, ch)) = seq.char_indices().find(|(_, c)| !matches!(c, 'A' | 'C' | 'G' | 'T')) {
            return Err(Error::Parse {
                path: path.into(),
                row: line,
                column: "sequence".into(),
                message: format!("invalid character {ch:?} at position {pos}"),
            });
        }
        labels.push(parse_number(path, line, "label", record.get(li).unwrap_or(""))?);
        sequences.push(seq);
    }
    if sequences.is_empty() {
        return Err(Error::Format {
            path: path.into(),
            message: "no data rows".into(),
        });
    }
    Ok(SequenceTable {
        source: path.into(),
        sequences,
        labels,
    })
}

/// Writes a header and rows of already formatted cells.
pub fn write_csv<I, R, S>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        let cells: Vec<S> = row.into_iter().collect();
        w.write_record(cells.iter().map(|c| c.as_ref().as_bytes()))
            .map_err(|e| Error::csv(path, e))?;
    }
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Writes features then the label as a dataset CSV.
pub fn write_dataset_csv(
    path: impl AsRef<Path>,
    feature_names: &[String],
    x: &DesignMatrix,
    label_name: &str,
    y: &[f64],
) -> Result<()> {
    crate::error::ensure_len("feature names", x.cols(), feature_names.len())?;
    crate::error::ensure_len("labels", x.rows(), y.len())?;
    let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
    header.push(label_name);
    let rows = (0..x.rows()).map(|i| {
        x.row(i)
            .iter()
            .chain(std::iter::once(&y[i]))
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
    });
    write_csv(path, &header, rows)
}

/// Writes a JSON value with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
