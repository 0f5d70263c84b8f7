use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_log::{ModelRole, TokenScoreLog};
use crate::stats::{auc_roc, ks_two_sample, rouge_l_text, RougeMode};

use super::logs::{GenerationLog, PromptKind, Split, TruthRatioLog};

/// Declared range and anchors of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: &'static str,
    pub scale: [f64; 2],
    /// Score of a model that never saw the forget set.
    pub ideal: f64,
    /// Score of the model before unlearning.
    pub worst: f64,
    pub requires_retrained: bool,
}

impl MetricSpec {
    const fn new(name: &'static str, ideal: f64, worst: f64, requires_retrained: bool) -> Self {
        MetricSpec {
            name,
            scale: [0.0, 1.0],
            ideal,
            worst,
            requires_retrained,
        }
    }
}

/// Chance accuracy over four options.
pub const MULTIPLE_CHOICE_CHANCE: f64 = 0.25;

pub const METRICS: &[MetricSpec] = &[
    MetricSpec::new("qa", 0.0, 1.0, false),
    MetricSpec::new("fb", 0.0, 1.0, false),
    MetricSpec::new("aa", 0.0, 1.0, false),
    MetricSpec::new("verb_mem", 0.0, 1.0, false),
    MetricSpec::new("know_mem", 0.0, 1.0, false),
    MetricSpec::new("qa_eval", MULTIPLE_CHOICE_CHANCE, 1.0, false),
    MetricSpec::new("prob_eval", MULTIPLE_CHOICE_CHANCE, 1.0, false),
    MetricSpec::new("tr_eval", 1.0, 0.0, true),
    MetricSpec {
        name: "privleak",
        scale: [-1.0, 1.0],
        ideal: 0.0,
        worst: 1.0,
        requires_retrained: true,
    },
    MetricSpec::new("dcue", 1.0, 0.0, false),
];

pub fn metric_spec(name: &str) -> Option<MetricSpec> {
    METRICS.iter().copied().find(|m| m.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric_name: String,
    pub value: f64,
    pub scale: [f64; 2],
    pub ideal: f64,
    pub worst: f64,
    /// Number of entries (or pairs) the value was averaged over.
    pub count: usize,
}

impl MetricScore {
    fn from_spec(name: &str, value: f64, count: usize) -> Self {
        let spec = metric_spec(name).expect("metric names are taken from METRICS");
        MetricScore {
            metric_name: spec.name.to_string(),
            value,
            scale: spec.scale,
            ideal: spec.ideal,
            worst: spec.worst,
            count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextSimKind {
    /// Original questions.
    Qa,
    /// Fill-in-the-blank rewrites.
    Fb,
    /// Adversarial rewrites.
    Aa,
}

fn mean_rouge(gen: &GenerationLog, kind: PromptKind, mode: RougeMode) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut count = 0;
    for e in gen.of_kind(kind) {
        let generated = e.generated_text.as_deref().unwrap_or_default();
        let reference = e.reference_text.as_deref().unwrap_or_default();
        total += rouge_l_text(generated, reference, mode)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptySample(format!(
            "no '{}' entries in generation log of '{}'",
            kind.label(),
            gen.model_id
        )));
    }
    Ok((total / count as f64, count))
}

/// Mean Rouge-L recall against the gold answer.
pub fn text_sim_metric(gen: &GenerationLog, kind: TextSimKind) -> Result<MetricScore> {
    let (prompt, name) = match kind {
        TextSimKind::Qa => (PromptKind::Qa, "qa"),
        TextSimKind::Fb => (PromptKind::FillBlank, "fb"),
        TextSimKind::Aa => (PromptKind::Adversarial, "aa"),
    };
    let (value, count) = mean_rouge(gen, prompt, RougeMode::Recall)?;
    Ok(MetricScore::from_spec(name, value, count))
}

/// Mean Rouge-L F1 of continuations after a prefix.
pub fn verb_mem(gen: &GenerationLog) -> Result<MetricScore> {
    let (value, count) = mean_rouge(gen, PromptKind::PrefixContinuation, RougeMode::F1)?;
    Ok(MetricScore::from_spec("verb_mem", value, count))
}

/// Mean Rouge-L F1 of direct answers.
pub fn know_mem(gen: &GenerationLog) -> Result<MetricScore> {
    let (value, count) = mean_rouge(gen, PromptKind::Qa, RougeMode::F1)?;
    Ok(MetricScore::from_spec("know_mem", value, count))
}

fn accuracy<'a>(
    entries: impl Iterator<Item = &'a super::logs::GenerationEntry>,
) -> Option<(f64, usize)> {
    let (mut correct, mut total) = (0usize, 0usize);
    for e in entries {
        total += 1;
        if e.chosen_option == e.correct_option {
            correct += 1;
        }
    }
    (total > 0).then(|| (correct as f64 / total as f64, total))
}

pub fn qa_eval_accuracy(gen: &GenerationLog) -> Result<MetricScore> {
    let (value, count) = accuracy(gen.of_kind(PromptKind::MultipleChoice)).ok_or_else(|| {
        Error::EmptySample(format!(
            "no multiple_choice entries in generation log of '{}'",
            gen.model_id
        ))
    })?;
    Ok(MetricScore::from_spec("qa_eval", value, count))
}

/// Accuracy on the held-out half, from a model fine-tuned on the other half.
pub fn prob_eval_accuracy(gen_after_finetune: &GenerationLog) -> Result<MetricScore> {
    if !gen_after_finetune.post_finetune {
        return Err(Error::InvalidArgument(format!(
            "generation log of '{}' is not labeled post_finetune",
            gen_after_finetune.model_id
        )));
    }
    let heldout = gen_after_finetune
        .of_kind(PromptKind::MultipleChoice)
        .filter(|e| e.split == Some(Split::Heldout));
    let (value, count) = accuracy(heldout)
        .ok_or_else(|| Error::EmptySample("no held-out multiple_choice entries".to_string()))?;
    Ok(MetricScore::from_spec("prob_eval", value, count))
}

/// KS p-value between the truth-ratio distributions of the retrained and
/// unlearned models.
pub fn tr_eval(tr_r: Option<&TruthRatioLog>, tr_u: &TruthRatioLog) -> Result<MetricScore> {
    let tr_r = tr_r.ok_or_else(|| Error::RequiresRetrained {
        metric: "tr_eval".into(),
        detail: "no truth-ratio log for M_r was supplied".into(),
    })?;
    if tr_r.model_role != ModelRole::Retrained {
        return Err(Error::RequiresRetrained {
            metric: "tr_eval".into(),
            detail: format!(
                "reference log '{}' is labeled {}, not M_r",
                tr_r.model_id, tr_r.model_role
            ),
        });
    }
    let ks = ks_two_sample(tr_r.values(), tr_u.values())?;
    Ok(MetricScore::from_spec(
        "tr_eval",
        ks.p_value,
        ks.n.min(ks.m),
    ))
}

/// Mean log-probability of the `k_percent` least likely tokens.
pub fn min_k_prob(token_probs: &[f64], k_percent: f64) -> Result<f64> {
    if token_probs.is_empty() {
        return Err(Error::EmptySample("Min-K% token probabilities".into()));
    }
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "k_percent must be in (0, 100], got {k_percent}"
        )));
    }
    if token_probs.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::InvalidArgument(
            "Min-K% probabilities must lie in (0, 1]".into(),
        ));
    }
    let n = token_probs.len();
    // k * n / 100 before rounding up, so exact products do not pick up an ulp
    let take = ((k_percent * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    let mut logs: Vec<f64> = token_probs.iter().map(|p| p.ln()).collect();
    logs.sort_by(f64::total_cmp);
    Ok(logs[..take].iter().sum::<f64>() / take as f64)
}

/// ROC AUC of a Min-K% membership attack separating forget-set members from
/// held-out non-members, using every answer token of each entry.
pub fn mia_auc(forget: &TokenScoreLog, holdout: &TokenScoreLog, k_percent: f64) -> Result<f64> {
    let scores = |log: &TokenScoreLog| -> Result<Vec<f64>> {
        log.entries()
            .iter()
            .filter(|e| !e.token_probs.is_empty())
            .map(|e| min_k_prob(&e.token_probs, k_percent))
            .collect()
    };
    auc_roc(&scores(forget)?, &scores(holdout)?)
}

/// Relative AUC gap `(auc_u - auc_r) / auc_r`.
///
/// The value is reported unclamped; the meta-evaluation clamps it to the
/// declared `[-1, 1]` scale with a diagnostic.
pub fn privleak(auc_u: f64, auc_r: f64) -> Result<MetricScore> {
    if !auc_u.is_finite() || !auc_r.is_finite() {
        return Err(Error::NonFinite("privleak AUC inputs"));
    }
    if auc_r <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "retrained-model AUC must be > 0, got {auc_r}"
        )));
    }
    Ok(MetricScore::from_spec(
        "privleak",
        (auc_u - auc_r) / auc_r,
        1,
    ))
}
