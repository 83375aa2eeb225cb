#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_json(s) {
            assert!(cfg.eps_value <= 1e-8 && cfg.lattice_cap >= 8);
        }
    }
});
