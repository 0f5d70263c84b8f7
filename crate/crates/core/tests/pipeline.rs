//! End-to-end paths through the public API: score logs written to text,
//! parsed back and scored.

use unlearn_gauge::baseline::{mia_auc, privleak};
use unlearn_gauge::dcue::{dcue_from_samples, evaluate_dcue};
use unlearn_gauge::score_log::{
    align_core_tokens, extract_ctcs, parse_score_log, CtcsSample, DatasetRole, ModelRole,
    ScoreEntry, TokenScoreLog,
};
use unlearn_gauge::sim::{gen_synthetic_ctcs, SimDataset, SimScenario, UMode};
use unlearn_gauge::Error;

/// One entry per value, each with a single core token.
fn log_from(
    model: &str,
    role: ModelRole,
    dataset: &str,
    dataset_role: DatasetRole,
    values: &[f64],
) -> TokenScoreLog {
    let entries = values
        .iter()
        .enumerate()
        .map(|(i, &p)| ScoreEntry {
            record_id: format!("{dataset}-{i}"),
            answer_tokens: vec!["The".into(), "answer".into()],
            token_probs: vec![0.9, p],
            core_token_indices: vec![1],
        })
        .collect();
    TokenScoreLog::new(model, role, dataset, dataset_role, "sim-tok", entries).unwrap()
}

fn round_trip(log: &TokenScoreLog) -> TokenScoreLog {
    parse_score_log(&log.write()).unwrap()
}

#[test]
fn logs_and_samples_give_the_same_score() {
    let scenario = SimScenario {
        seed: 5,
        u_mode: UMode::Interpolated(0.85),
        ..SimScenario::default()
    };
    let draw = |role, ds, trial| gen_synthetic_ctcs(&scenario, role, ds, trial).unwrap();
    let u_f = draw(ModelRole::Unlearned, SimDataset::Forget, 0);
    let o_f = draw(ModelRole::Original, SimDataset::Forget, 0);
    let u_v = draw(ModelRole::Unlearned, SimDataset::Validation, 2);
    let o_v = draw(ModelRole::Original, SimDataset::Validation, 2);
    let direct = dcue_from_samples(&u_f, &o_f, &u_v, &o_v).unwrap();

    let logs = [
        log_from(
            "unl",
            ModelRole::Unlearned,
            "forget",
            DatasetRole::Forget,
            u_f.values(),
        ),
        log_from(
            "orig",
            ModelRole::Original,
            "forget",
            DatasetRole::Forget,
            o_f.values(),
        ),
        log_from(
            "unl",
            ModelRole::Unlearned,
            "val",
            DatasetRole::Validation,
            u_v.values(),
        ),
        log_from(
            "orig",
            ModelRole::Original,
            "val",
            DatasetRole::Validation,
            o_v.values(),
        ),
    ]
    .map(|l| round_trip(&l));
    let via_logs = evaluate_dcue(&logs[0], &logs[1], &logs[2], &logs[3]).unwrap();
    assert_eq!(direct, via_logs);
    assert!(via_logs.r_dcue > 0.0 && via_logs.r_dcue < 1.0);
}

#[test]
fn four_identical_logs_score_one() {
    let log = log_from(
        "m",
        ModelRole::Other,
        "d",
        DatasetRole::Other,
        &[0.1, 0.4, 0.4, 0.95],
    );
    let r = evaluate_dcue(&log, &log, &log, &log).unwrap();
    assert_eq!(r.s_corr, 0.0);
    assert_eq!(r.r_dcue, 1.0);
}

#[test]
fn swapped_slots_are_rejected() {
    let u = log_from("u", ModelRole::Unlearned, "f", DatasetRole::Forget, &[0.5]);
    let o = log_from("o", ModelRole::Original, "f", DatasetRole::Forget, &[0.5]);
    let uv = log_from(
        "u",
        ModelRole::Unlearned,
        "v",
        DatasetRole::Validation,
        &[0.5],
    );
    let ov = log_from(
        "o",
        ModelRole::Original,
        "v",
        DatasetRole::Validation,
        &[0.5],
    );
    assert!(evaluate_dcue(&u, &o, &uv, &ov).is_ok());
    assert!(matches!(
        evaluate_dcue(&o, &u, &uv, &ov),
        Err(Error::RoleMismatch { .. })
    ));
    assert!(matches!(
        evaluate_dcue(&u, &o, &ov, &uv),
        Err(Error::RoleMismatch { .. })
    ));
}

#[test]
fn aligned_core_tokens_feed_ctcs() {
    let tokens = ["▁He", "▁works", "▁as", "▁a", "▁civil", "▁engineer", "."];
    let alignment = align_core_tokens(&tokens, &["civil", "engineer"]);
    assert_eq!(alignment.indices, vec![4, 5]);
    let entry = ScoreEntry {
        record_id: "q1".into(),
        answer_tokens: tokens.iter().map(|t| t.to_string()).collect(),
        token_probs: vec![0.99, 0.8, 0.9, 0.95, 0.25, 0.5, 0.97],
        core_token_indices: alignment.indices,
    };
    let log = TokenScoreLog::new(
        "m",
        ModelRole::Unlearned,
        "d",
        DatasetRole::Forget,
        "tok",
        vec![entry],
    )
    .unwrap();
    assert_eq!(
        extract_ctcs(&round_trip(&log)).unwrap().values(),
        &[0.25, 0.5]
    );
}

#[test]
fn privleak_from_score_logs() {
    // The evaluated model ranks members above non-members perfectly; the
    // retrained one is at chance.
    let members = log_from(
        "u",
        ModelRole::Unlearned,
        "f",
        DatasetRole::Forget,
        &[0.9, 0.8, 0.95],
    );
    let holdout = log_from(
        "u",
        ModelRole::Unlearned,
        "h",
        DatasetRole::Holdout,
        &[0.2, 0.1, 0.3],
    );
    let r_members = log_from(
        "r",
        ModelRole::Retrained,
        "f",
        DatasetRole::Forget,
        &[0.5, 0.5],
    );
    let r_holdout = log_from(
        "r",
        ModelRole::Retrained,
        "h",
        DatasetRole::Holdout,
        &[0.5, 0.5],
    );
    let auc_u = mia_auc(&members, &holdout, 100.0).unwrap();
    let auc_r = mia_auc(&r_members, &r_holdout, 100.0).unwrap();
    assert_eq!(auc_r, 0.5);
    let leak = privleak(auc_u, auc_r).unwrap();
    assert!((leak.value - (auc_u - 0.5) / 0.5).abs() < 1e-15);
}

#[test]
fn ctcs_sample_rejects_out_of_range() {
    assert!(CtcsSample::new("m", "d", vec![0.5, 1.5]).is_err());
    assert!(CtcsSample::new("m", "d", vec![]).is_err());
}
