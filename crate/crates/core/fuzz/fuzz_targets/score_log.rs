//! Score log parsing must never panic, and anything it accepts must survive
//! a write/parse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::score_log::{extract_ctcs, parse_score_log};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(log) = parse_score_log(text) {
        let again = parse_score_log(&log.write()).expect("written log parses");
        assert_eq!(again, log);
        if let Ok(ctcs) = extract_ctcs(&log) {
            assert!(ctcs.values().iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }
});
