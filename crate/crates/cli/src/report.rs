//! Deterministic report files: comma-separated CSV with a mandatory header
//! and `.` decimals, plus plain-text summaries.
//!
//! Float cells use Rust's shortest round-trip formatting, so equal inputs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// One CSV cell; numbers format via their shortest round-trip representation.
#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Int(i64),
    UInt(u64),
    Float(f64),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Text(s) => {
                debug_assert!(
                    !s.contains(',') && !s.contains('\n'),
                    "cell text must not need quoting"
                );
                out.push_str(s);
            }
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Float(v) => {
                let _ = write!(out, "{v}");
            }
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}

/// Write `header` plus `rows` to `path`. An empty row set still writes the
/// header line, so reruns of empty experiments stay byte-identical too.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<Cell>],
) -> Result<(), ReportError> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width must match the header");
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            cell.render(&mut text);
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("wavepair-report-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn csv_has_header_even_when_empty() {
        let path = temp_path("empty.csv");
        write_csv(&path, &["delta", "seed", "rel_error"], &[]).unwrap();
        let got = fs::read_to_string(&path).unwrap();
        assert_eq!(got, "delta,seed,rel_error\n");
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn csv_cells_round_trip_floats() {
        let path = temp_path("rows.csv");
        let rows = vec![
            vec![Cell::Float(0.1), Cell::UInt(3), Cell::from("converged")],
            vec![Cell::Float(1.0 / 3.0), Cell::UInt(4), Cell::from("max-iterations")],
        ];
        write_csv(&path, &["delta", "seed", "status"], &rows).unwrap();
        let got = fs::read_to_string(&path).unwrap();
        let mut lines = got.lines();
        assert_eq!(lines.next(), Some("delta,seed,status"));
        let row = lines.next().unwrap();
        let cell = row.split(',').next().unwrap();
        let back: f64 = cell.parse().unwrap();
        assert_eq!(back, 0.1);
        let row = lines.next().unwrap();
        let back: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let path = temp_path("stable.csv");
        let rows = vec![vec![Cell::Float(2.0_f64.sqrt()), Cell::Int(-1)]];
        write_csv(&path, &["value", "code"], &rows).unwrap();
        let first = fs::read(&path).unwrap();
        write_csv(&path, &["value", "code"], &rows).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
        fs::remove_file(&path).unwrap();
    }
}
