use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed run never leaves a truncated file behind.
pub fn write_atomic<F>(path: &Path, body: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes `rows` as CSV with an optional leading `#` comment line.
pub fn write_csv<T: Serialize>(path: &Path, comment: Option<&str>, rows: &[T]) -> io::Result<()> {
    write_atomic(path, |w| {
        if let Some(c) = comment {
            writeln!(w, "# {c}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        for r in rows {
            wtr.serialize(r).map_err(io::Error::other)?;
        }
        wtr.flush()
    })
}

#[derive(Debug, Serialize)]
pub struct IntervalRow {
    pub row: usize,
    pub model: &'static str,
    pub score: String,
    pub method: String,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
    pub truth: Option<f64>,
    pub covered: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct SimulationRow {
    pub scenario: String,
    pub model: String,
    pub score: String,
    pub method: String,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub coverage: f64,
    pub avg_width: f64,
    pub cpu_mean: f64,
    pub cpu_sd: f64,
    pub failures: usize,
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub score: String,
    pub method: String,
    pub n_test: usize,
    pub alpha: f64,
    pub coverage: f64,
    pub avg_width: f64,
    pub empty: usize,
}

#[derive(Debug, Serialize)]
pub struct PlotRow {
    pub row: usize,
    pub model: String,
    pub score: String,
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    pub truth: f64,
    pub covered: bool,
    pub empty: bool,
}
