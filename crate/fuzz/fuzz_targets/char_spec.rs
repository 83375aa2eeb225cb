#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff_cli::args::parse_characteristic;

fuzz_target!(|data: &str| {
    let _ = parse_characteristic(data);
});
