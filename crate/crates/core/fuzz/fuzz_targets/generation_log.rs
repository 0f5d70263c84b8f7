//! Generation logs feed every text metric; a parsed log must round-trip
//! and must not make the metrics panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unlearn_gauge::baseline::{
    know_mem, parse_generation_log, qa_eval_accuracy, text_sim_metric, verb_mem, TextSimKind,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(log) = parse_generation_log(text) else {
        return;
    };
    let again = parse_generation_log(&log.write()).expect("written log parses");
    assert_eq!(again.entries(), log.entries());
    for kind in [TextSimKind::Qa, TextSimKind::Fb, TextSimKind::Aa] {
        if let Ok(score) = text_sim_metric(&log, kind) {
            assert!((0.0..=1.0).contains(&score.value));
        }
    }
    let _ = verb_mem(&log);
    let _ = know_mem(&log);
    let _ = qa_eval_accuracy(&log);
});
