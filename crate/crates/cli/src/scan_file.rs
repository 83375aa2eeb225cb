//! Scan CSV files, which double as the resume state of `locus scan`.
//!
//! Layout: `# key=value` metadata lines, the column header, then one line per
//! sample in row-major order (all `x` for the first `y`, then the next `y`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use theta_bidiff::locus::{scan_rows, LocusSample, ScanGrid};

use crate::output::{float, write_atomic, Meta};

pub const COLUMNS: [&str; 9] = ["x", "y", "w", "wx", "wy", "r1", "r2", "res", "err"];
const TITLE: &str = "# theta-bidiff locus scan\n";

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScan {
    pub metadata: BTreeMap<String, String>,
    pub samples: Vec<LocusSample>,
}

/// Header block (metadata and column names) for a scan.
pub fn header(grid: &ScanGrid, meta: &Meta) -> String {
    format!(
        "{TITLE}# window={},{},{},{}\n# grid={},{}\n{}{}\n",
        float(grid.x_min),
        float(grid.x_max),
        float(grid.y_min),
        float(grid.y_max),
        grid.nx,
        grid.ny,
        meta.csv_lines(),
        COLUMNS.join(",")
    )
}

pub fn format_row(s: &LocusSample) -> String {
    let err = s.err.as_deref().unwrap_or("");
    format!(
        "{},{},{},{},{},{},{},{},{}\n",
        float(s.x),
        float(s.y),
        float(s.w),
        float(s.w_x),
        float(s.w_y),
        float(s.r1),
        float(s.r2),
        float(s.res),
        err
    )
}

/// Parses a complete scan file. Every line must be well formed.
pub fn parse_scan(text: &str) -> Result<ParsedScan, String> {
    let mut metadata = BTreeMap::new();
    let mut lines = text.lines();
    let columns = loop {
        let line = lines.next().ok_or("missing column header")?;
        match line.strip_prefix('#') {
            Some(rest) => {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            None => break line,
        }
    };
    if columns != COLUMNS.join(",") {
        return Err(format!("unexpected column header {columns:?}"));
    }
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(body.as_bytes());
    let mut samples = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("row {}: {e}", k + 1))?;
        if record.len() != COLUMNS.len() {
            return Err(format!("row {}: expected {} fields", k + 1, COLUMNS.len()));
        }
        let num = |i: usize| -> Result<f64, String> {
            record[i]
                .parse::<f64>()
                .map_err(|_| format!("row {}: bad {} value {:?}", k + 1, COLUMNS[i], &record[i]))
        };
        let err = &record[8];
        samples.push(LocusSample {
            x: num(0)?,
            y: num(1)?,
            w: num(2)?,
            w_x: num(3)?,
            w_y: num(4)?,
            r1: num(5)?,
            r2: num(6)?,
            res: num(7)?,
            err: if err.is_empty() { None } else { Some(err.to_string()) },
        });
    }
    Ok(ParsedScan { metadata, samples })
}

/// Number of leading complete rows of `grid` stored in `existing`, which may
/// end in a partially written line.
pub fn completed_rows(existing: &str, expected_header: &str, grid: &ScanGrid) -> Result<usize, String> {
    let complete = match existing.rfind('\n') {
        Some(i) => &existing[..=i],
        None => "",
    };
    if complete.len() <= expected_header.len() {
        if expected_header.starts_with(complete) {
            return Ok(0);
        }
        return Err("existing scan file has a different header".into());
    }
    if !complete.starts_with(expected_header) {
        return Err("existing scan file was produced with different settings".into());
    }
    let parsed = parse_scan(complete)?;
    let rows = parsed.samples.len() / grid.nx;
    for (k, s) in parsed.samples[..rows * grid.nx].iter().enumerate() {
        let (i, j) = (k % grid.nx, k / grid.nx);
        if s.x.to_bits() != grid.x(i).to_bits() || s.y.to_bits() != grid.y(j).to_bits() {
            return Err(format!("existing scan row {} does not match the grid", j + 1));
        }
    }
    Ok(rows.min(grid.ny))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    pub out: String,
    pub rows_total: usize,
    pub rows_resumed: usize,
    pub rows_computed: usize,
    pub samples: usize,
    pub failed_samples: usize,
    pub min_res: Option<f64>,
    pub argmin: Option<[f64; 2]>,
    pub meta: Meta,
}

/// Runs a scan into `path`, rewriting the file atomically after each block of
/// rows. With `resume`, rows already present in `path` are kept.
pub fn run_scan(
    path: &Path,
    grid: &ScanGrid,
    meta: &Meta,
    lattice_m: usize,
    resume: bool,
    block_rows: usize,
) -> Result<ScanSummary, String> {
    let head = header(grid, meta);
    let mut body = String::new();
    let mut done = 0;
    if resume && path.exists() {
        let existing = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        done = completed_rows(&existing, &head, grid)?;
        let keep = head.len()
            + existing[head.len().min(existing.len())..]
                .split_inclusive('\n')
                .take(done * grid.nx)
                .map(str::len)
                .sum::<usize>();
        if done > 0 {
            body.push_str(&existing[head.len()..keep]);
        }
    }
    let resumed = done;
    let block = block_rows.max(1);
    let write = |body: &str| {
        let mut doc = head.clone();
        doc.push_str(body);
        write_atomic(path, doc.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))
    };
    if done == grid.ny {
        write(&body)?;
    }
    while done < grid.ny {
        let end = (done + block).min(grid.ny);
        for s in scan_rows(grid, done..end, lattice_m) {
            body.push_str(&format_row(&s));
        }
        done = end;
        write(&body)?;
    }

    let doc = format!("{head}{body}");
    let parsed = parse_scan(&doc)?;
    let failed = parsed.samples.iter().filter(|s| s.err.is_some()).count();
    let best = parsed
        .samples
        .iter()
        .filter(|s| s.res.is_finite())
        .min_by(|a, b| a.res.total_cmp(&b.res));
    Ok(ScanSummary {
        out: path.display().to_string(),
        rows_total: grid.ny,
        rows_resumed: resumed,
        rows_computed: grid.ny - resumed,
        samples: parsed.samples.len(),
        failed_samples: failed,
        min_res: best.map(|s| s.res),
        argmin: best.map(|s| [s.x, s.y]),
        meta: meta.clone(),
    })
}
