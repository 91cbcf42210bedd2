//! CSV artifacts: `#` provenance comment, header, numeric rows, LF endings.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvArtifact {
    pub file_name: String,
    /// Content of the leading comment line, without the `# ` prefix.
    pub provenance: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvArtifact {
    pub fn new(file_name: &str, provenance: String, header: &[&str]) -> Self {
        CsvArtifact {
            file_name: file_name.to_string(),
            provenance,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    /// Column `name` as a vector.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Serialized bytes. `f64` values use the shortest representation that
    /// parses back to the identical bit pattern.
    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        writeln!(out, "# {}", self.provenance)?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        writer.write_record(&self.header).map_err(csv_error)?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(CliError::Solver(format!(
                    "{} row {i}: {} values for {} columns",
                    self.file_name,
                    row.len(),
                    self.header.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(CliError::Solver(format!(
                    "{} row {i}: non-finite value {v}",
                    self.file_name
                )));
            }
            writer
                .write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_error)?;
        }
        writer.flush()?;
        drop(writer);
        Ok(out)
    }

    /// Writes into `dir` through a temporary file and an atomic rename, so a
    /// failure never leaves a partial artifact behind.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let bytes = self.to_bytes()?;
        std::fs::create_dir_all(dir)?;
        let target = dir.join(&self.file_name);
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Io(e.error))?;
        Ok(target)
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
