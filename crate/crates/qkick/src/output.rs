//! CSV/JSON writers. Number formatting is fixed so that identical runs give
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qkick_core::spin_chain::ket_string;
use qkick_core::Matrix;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Header plus rows of pre-formatted fields.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Density-matrix dump: one line per entry with `|i>` / `|j>` labels,
/// real and imaginary parts and the modulus (for bar-chart plots).
pub fn write_matrix(path: &Path, rho: &Matrix, n_qubits: usize) -> Result<()> {
    let header: Vec<String> = ["row", "col", "row_ket", "col_ket", "re", "im", "abs"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let dim = rho.nrows();
    let rows: Vec<Vec<String>> = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| {
            let z = rho[(a, b)];
            vec![
                (a + 1).to_string(),
                (b + 1).to_string(),
                format!("|{}>", ket_string(a, n_qubits)),
                format!("|{}>", ket_string(b, n_qubits)),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm()),
            ]
        })
        .collect();
    write_csv(path, &header, &rows)
}

pub fn out_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}"))
}
