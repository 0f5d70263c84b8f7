//! Scenario files are TOML. Anything accepted is run with a tiny trial
//! count, which must not panic either.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::sim::{parse_scenario, run_validation};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mut scenario) = parse_scenario(text) else {
        return;
    };
    scenario.n_f = scenario.n_f.min(64);
    scenario.n_v = scenario.n_v.min(64);
    scenario.n_trials = scenario.n_trials.min(2);
    if let Ok(report) = run_validation(&scenario, 0.05) {
        for pair in &report.pairs {
            assert!((0.0..=1.0).contains(&pair.p_direct));
            assert!((0.0..=1.0).contains(&pair.p_approx));
        }
    }
});
