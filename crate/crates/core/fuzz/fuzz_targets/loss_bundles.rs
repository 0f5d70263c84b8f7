#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::losses::{parse_bundles, LossKind};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(bundles) = parse_bundles(text) {
            for b in &bundles {
                for kind in LossKind::ALL {
                    // Missing inputs and overflow are errors, not panics.
                    let _ = kind.evaluate(b);
                }
            }
        }
    }
});
