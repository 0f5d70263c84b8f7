#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::baseline::{parse_truth_ratio_log, tr_eval};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(log) = parse_truth_ratio_log(text) {
            // Used as both sides: must either score or refuse, never panic.
            if let Ok(score) = tr_eval(Some(&log), &log) {
                assert_eq!(score.value, 1.0);
            }
        }
    }
});
