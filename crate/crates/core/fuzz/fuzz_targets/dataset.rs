#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::score_log::{parse_dataset, write_dataset};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(records) = parse_dataset(text) {
            let again = parse_dataset(&write_dataset(&records)).expect("written dataset parses");
            assert_eq!(again, records);
        }
    }
});
