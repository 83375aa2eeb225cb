//! Scan files are read back on `--resume`; neither the parser nor the
//! resume bookkeeping may panic on damaged input.

#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff::locus::ScanGrid;
use theta_bidiff_cli::output::Meta;
use theta_bidiff_cli::scan_file::{completed_rows, header, parse_scan};
use theta_bidiff_cli::RunConfig;

fuzz_target!(|data: &str| {
    let _ = parse_scan(data);
    let grid = ScanGrid::new(-0.5, 0.5, 0.5, 1.5, 3, 3).unwrap();
    let head = header(&grid, &Meta::new(&RunConfig::default(), 5.0));
    let text = format!("{head}{data}");
    if let Ok(rows) = completed_rows(&text, &head, &grid) {
        assert!(rows <= grid.ny);
    }
});
