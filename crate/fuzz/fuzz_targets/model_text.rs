#![no_main]

use etbell::lhv::LhvModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(model) = LhvModel::from_text(s) {
            // anything accepted must survive a write/read cycle
            let again = LhvModel::from_text(&model.to_text()).expect("re-parse written model");
            assert_eq!(again, model);
        }
    }
});
