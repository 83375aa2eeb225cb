#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff_cli::args::parse_u;

fuzz_target!(|data: &str| {
    if let Ok(u) = parse_u(data) {
        assert!(u.bits().iter().all(|&b| b <= 1));
    }
});
