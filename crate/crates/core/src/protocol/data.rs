//! Plaintext database, attribute bounds and the selection matrix.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::profile::parse_bounds;
use crate::error::{Error, Result};
use crate::pfe::FunctionSpec;
use crate::threshold::threshold_plain;

/// Attribute bounds: a default plus per-attribute overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub default: (f64, f64),
    pub per_attribute: BTreeMap<String, (f64, f64)>,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            default: (0.0, 2.0),
            per_attribute: BTreeMap::new(),
        }
    }
}

impl Bounds {
    /// Reads `bounds = a:b` and `bounds.<name> = a:b` from sidecar entries.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self> {
        let mut out = Self::default();
        for (key, value) in entries {
            if key == "bounds" {
                out.default = parse_bounds(value)?;
            } else if let Some(name) = key.strip_prefix("bounds.") {
                out.per_attribute.insert(name.to_string(), parse_bounds(value)?);
            }
        }
        Ok(out)
    }

    pub fn of(&self, name: &str) -> (f64, f64) {
        self.per_attribute.get(name).copied().unwrap_or(self.default)
    }
}

/// `p x h` matrix of attribute values.
#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    bounds: Vec<(f64, f64)>,
}

impl Database {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, bounds: &Bounds) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("database has no rows".into()));
        }
        let bounds: Vec<(f64, f64)> = names.iter().map(|n| bounds.of(n)).collect();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::Database {
                    row: r,
                    column: row.len().min(names.len()),
                    message: format!("expected {} values, found {}", names.len(), row.len()),
                });
            }
            for (c, (&x, &(low, high))) in row.iter().zip(&bounds).enumerate() {
                if !(x >= low && x < high) {
                    return Err(Error::Database {
                        row: r,
                        column: c,
                        message: format!("{x} outside [{low}, {high})"),
                    });
                }
            }
        }
        Ok(Self { names, rows, bounds })
    }

    /// Parses CSV with a header row of attribute names. Row numbers in errors
    /// count data rows from 0.
    pub fn from_csv(reader: impl Read, bounds: &Bounds) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = csv
            .headers()
            .map_err(|e| Error::InvalidInput(format!("csv header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (r, record) in csv.records().enumerate() {
            let record = record.map_err(|e| Error::Database {
                row: r,
                column: 0,
                message: e.to_string(),
            })?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    field.parse::<f64>().map_err(|_| Error::Database {
                        row: r,
                        column: c,
                        message: format!("'{field}' is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(names, rows, bounds)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        csv.write_record(&self.names).map_err(io)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.names.len()
    }

    /// `P' = P x M`.
    pub fn select(&self, selection: &SelectionMatrix) -> Result<Vec<Vec<f64>>> {
        if selection.rows() != self.attribute_count() {
            return Err(Error::InvalidInput(format!(
                "selection has {} rows for {} attributes",
                selection.rows(),
                self.attribute_count()
            )));
        }
        Ok(self.rows.iter().map(|row| selection.apply(row)).collect())
    }

    /// Rows `range` as a database of their own.
    pub fn row_slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let rows = self
            .rows
            .get(range.clone())
            .ok_or_else(|| Error::InvalidInput(format!("row range {range:?} out of bounds")))?
            .to_vec();
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty row range".into()));
        }
        Ok(Self {
            names: self.names.clone(),
            rows,
            bounds: self.bounds.clone(),
        })
    }

    /// Attributes `range` as a database of their own.
    pub fn column_slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.attribute_count() {
            return Err(Error::InvalidInput(format!("column range {range:?} out of bounds")));
        }
        Ok(Self {
            names: self.names[range.clone()].to_vec(),
            rows: self.rows.iter().map(|r| r[range.clone()].to_vec()).collect(),
            bounds: self.bounds[range].to_vec(),
        })
    }
}

/// `h x m` attribute-selection matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SelectionMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "selection matrix {rows}x{cols} with {} entries",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("selection matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(h: usize) -> Self {
        let mut data = vec![0.0; h * h];
        for i in 0..h {
            data[i * h + i] = 1.0;
        }
        Self { rows: h, cols: h, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row vector times the matrix.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| row.iter().enumerate().map(|(i, x)| x * self.get(i, j)).sum())
            .collect()
    }
}

/// Plaintext reference: `sum_j f_j((P x M)_{r,j})` for every row.
pub fn plaintext_scores(db: &Database, selection: &SelectionMatrix, functions: &[FunctionSpec]) -> Result<Vec<f64>> {
    if selection.cols() != functions.len() {
        return Err(Error::InvalidInput(format!(
            "selection has {} columns for {} functions",
            selection.cols(),
            functions.len()
        )));
    }
    db.select(selection)?
        .iter()
        .map(|row| row.iter().zip(functions).map(|(&x, f)| f.eval_plain(x)).sum())
        .collect()
}

/// Plaintext reference bit: at least `t1` rows score at least `t0`.
pub fn plaintext_bit(
    db: &Database,
    selection: &SelectionMatrix,
    functions: &[FunctionSpec],
    t0: f64,
    t1: u64,
) -> Result<bool> {
    let scores = plaintext_scores(db, selection, functions)?;
    Ok(scores.iter().filter(|&&s| threshold_plain(s, t0)).count() as u64 >= t1)
}
