#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff_cli::args::{parse_complex, parse_grid, parse_window, parse_z_list};

fuzz_target!(|data: &str| {
    if let Ok(z) = parse_z_list(data) {
        assert!(!z.is_empty());
        assert!(z.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
    let _ = parse_complex(data);
    let _ = parse_window(data);
    let _ = parse_grid(data);
});
