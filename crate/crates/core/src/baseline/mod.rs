//! Existing unlearning metrics, computed from generation, truth-ratio and
//! score logs so they can be meta-evaluated next to DCUE.

mod logs;
mod metrics;

pub use logs::{
    load_generation_log, load_truth_ratio_log, parse_generation_log, parse_truth_ratio_log,
    GenerationEntry, GenerationLog, PromptKind, Split, TruthRatioLog,
};
pub use metrics::{
    know_mem, metric_spec, mia_auc, min_k_prob, privleak, prob_eval_accuracy, qa_eval_accuracy,
    text_sim_metric, tr_eval, verb_mem, MetricScore, MetricSpec, TextSimKind, METRICS,
    MULTIPLE_CHOICE_CHANCE,
};
