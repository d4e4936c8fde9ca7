#![no_main]

use etbell::config::parse_config;
use etbell::config_validator::validate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(s) {
            if let Some(geometry) = cfg.geometry {
                let _ = validate(&geometry);
            }
        }
    }
});
