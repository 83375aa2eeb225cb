use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;

/// Metadata block attached to every emitted document.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub eps_value: f64,
    pub eps_jet: f64,
    pub lattice_cap: usize,
    /// Truncation radius (theta series) or half-width (lattice sums) used.
    pub lattice_bound: f64,
    pub seed: u64,
}

impl Meta {
    pub fn new(cfg: &RunConfig, lattice_bound: f64) -> Self {
        Meta {
            eps_value: cfg.eps_value,
            eps_jet: cfg.eps_jet,
            lattice_cap: cfg.lattice_cap,
            lattice_bound,
            seed: cfg.seed,
        }
    }

    /// `# key=value` lines for CSV documents.
    pub fn csv_lines(&self) -> String {
        format!(
            "# eps_value={:?}\n# eps_jet={:?}\n# lattice_cap={}\n# lattice_bound={:?}\n# seed={}\n",
            self.eps_value, self.eps_jet, self.lattice_cap, self.lattice_bound, self.seed
        )
    }
}

pub fn complex(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

pub fn vector(v: &DVector<Complex64>) -> Vec<[f64; 2]> {
    v.iter().map(|c| complex(*c)).collect()
}

pub fn matrix(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| complex(m[(i, j)])).collect()).collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Sends a document to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()
        }
    }
}
