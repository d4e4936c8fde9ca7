#![no_main]

use etbell::cli::RunReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = RunReport::from_json(s);
    }
});
