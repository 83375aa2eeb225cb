#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff::PeriodMatrix;

fuzz_target!(|data: &str| {
    if let Ok(tau) = PeriodMatrix::from_json(data) {
        // anything accepted must survive a round trip
        let again = PeriodMatrix::from_json(&tau.to_json()).expect("round trip");
        assert_eq!(again.g(), tau.g());
        assert!(tau.min_im_eigenvalue() > 0.0);
    }
});
