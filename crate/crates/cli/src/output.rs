//! CSV output: UTF-8, `.` decimals, LF line endings, header row first.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// A CSV file that is flushed after every row, so partial results survive
/// an interrupted run.
pub struct RowWriter {
    inner: csv::Writer<File>,
    path: PathBuf,
}

impl RowWriter {
    /// The header is written immediately, so even an empty result has one.
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        inner.write_record(header)?;
        inner.flush()?;
        Ok(Self { inner, path })
    }

    pub fn row<T: Serialize>(&mut self, row: &T) -> Result<(), CliError> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Writes all rows at once.
pub fn write_rows<T: Serialize>(dir: &Path, name: &str, header: &[&str], rows: &[T]) -> Result<PathBuf, CliError> {
    let mut w = RowWriter::create(dir, name, header)?;
    for r in rows {
        w.row(r)?;
    }
    Ok(w.path().to_path_buf())
}
