#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::meta::{parse_meta_config, render_table};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(inputs) = parse_meta_config(text) else {
        return;
    };
    let reports: Vec<_> = inputs.iter().filter_map(|i| i.report().ok()).collect();
    for r in &reports {
        for v in [
            r.exactness_plus,
            r.exactness_minus,
            r.robustness_ul,
            r.robustness_ft,
            r.robustness_mix,
        ]
        .into_iter()
        .flatten()
        {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let _ = render_table(&reports);
});
