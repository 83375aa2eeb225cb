#![no_main]

use libfuzzer_sys::fuzz_target;
use theta_bidiff::Characteristic;

fuzz_target!(|data: &str| {
    if let Ok(c) = Characteristic::from_json(data) {
        assert_eq!(c.a().len(), c.b().len());
        if let Some(text) = c.to_json() {
            let again = Characteristic::from_json(&text).expect("round trip");
            assert_eq!(again.parity(), c.parity());
        }
    }
});
