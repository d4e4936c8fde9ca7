#![no_main]

use etbell::phys_model::{qm_chsh, PhaseConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(phases) = PhaseConfig::parse(s) {
            for x in phases.as_array() {
                assert!(x > -std::f64::consts::PI && x <= std::f64::consts::PI);
            }
            assert!(qm_chsh(&phases).beta.abs() <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
        }
    }
});
