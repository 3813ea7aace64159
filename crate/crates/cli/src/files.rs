//! File formats of the command-line workflow.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use dbx::pfe::FunctionSpec;
use dbx::protocol::{Bounds, Contexts, Database, Profile, ProfileKind, SelectionMatrix};
use dbx::{Error, Result};

/// Profile, attribute bounds and fixture thresholds from `--profile` and an optional sidecar.
#[derive(Debug)]
pub struct Setup {
    pub profile: Profile,
    pub bounds: Bounds,
    pub t0: Option<f64>,
    pub t1: Option<u64>,
}

impl Setup {
    pub fn load(kind: ProfileKind, sidecar: Option<&Path>) -> Result<Self> {
        let Some(path) = sidecar else {
            return Ok(Self {
                profile: Profile::by_kind(kind),
                bounds: Bounds::default(),
                t0: None,
                t1: None,
            });
        };
        let text = std::fs::read_to_string(path)?;
        let with_kind = if text.lines().any(|l| l.trim_start().starts_with("profile")) {
            text
        } else {
            format!("profile = {kind}\n{text}")
        };
        let (profile, mut rest) = Profile::from_sidecar(&with_kind)?;
        let bounds = Bounds::from_entries(&rest)?;
        rest.retain(|k, _| k != "bounds" && !k.starts_with("bounds."));
        let t0 = take_parsed(&mut rest, "t0")?;
        let t1 = take_parsed(&mut rest, "t1")?;
        if let Some(key) = rest.keys().next() {
            return Err(Error::Config(format!("unknown sidecar key '{key}'")));
        }
        Ok(Self {
            profile,
            bounds,
            t0,
            t1,
        })
    }

    pub fn contexts(&self) -> Result<Arc<Contexts>> {
        Ok(Arc::new(Contexts::new(self.profile.clone())?))
    }
}

fn take_parsed<T: std::str::FromStr>(entries: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    entries
        .remove(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
        })
        .transpose()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

fn numbers(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .enumerate()
        .map(|(c, field)| {
            field.trim().parse().map_err(|_| Error::Database {
                row: line,
                column: c,
                message: format!("'{field}' is not a number"),
            })
        })
        .collect()
}

fn headerless(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(File::open(path)?))
}

/// One function per line: `low,high,v_0,...,v_{n-1}`.
pub fn read_functions(path: &Path) -> Result<Vec<FunctionSpec>> {
    let mut out = Vec::new();
    for (line, record) in headerless(path)?.records().enumerate() {
        let values = numbers(&record.map_err(csv_error)?, line)?;
        if values.len() < 3 {
            return Err(Error::Database {
                row: line,
                column: values.len(),
                message: "expected low, high and at least one table value".into(),
            });
        }
        out.push(FunctionSpec::new(values[0], values[1], values[2..].to_vec())?);
    }
    Ok(out)
}

pub fn write_functions(path: &Path, specs: &[FunctionSpec]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error)?;
    for spec in specs {
        let mut fields = vec![spec.low.to_string(), spec.high.to_string()];
        fields.extend(spec.table.iter().map(f64::to_string));
        w.write_record(&fields).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `h` lines of `m` weights.
pub fn read_selection(path: &Path) -> Result<SelectionMatrix> {
    let rows = headerless(path)?
        .records()
        .enumerate()
        .map(|(line, r)| numbers(&r.map_err(csv_error)?, line))
        .collect::<Result<Vec<_>>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(line) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Database {
            row: line,
            column: rows[line].len().min(cols),
            message: format!("expected {cols} weights"),
        });
    }
    SelectionMatrix::new(rows.len(), cols, rows.concat())
}

pub fn read_database(path: &Path, bounds: &Bounds) -> Result<Database> {
    Database::from_csv(BufReader::new(File::open(path)?), bounds)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}
