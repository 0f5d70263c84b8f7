//! Distribution-corrected unlearning evaluation.
//!
//! The unlearned model `M_u` is compared with the public original model `M_o`
//! on the forget set. The part of that KS gap that fine-tuning on retained
//! data would have caused anyway is estimated on a held-out validation set
//! and subtracted. The corrected gap is then turned into a KS p-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_log::{extract_ctcs, CtcsSample, DatasetRole, ModelRole, TokenScoreLog};
use crate::stats::{ks_pvalue, ks_statistic};

/// How the sample size of the unlearned model's forget-set CTCS enters the
/// final KS p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeConvention {
    /// Two samples of `n_eff` points each: `S * sqrt(n_eff / 2)`.
    TwoSampleEqual,
    /// One sample against a reference distribution: `S * sqrt(n_eff)`.
    OneSample,
}

impl SizeConvention {
    pub fn adjust(self, statistic: f64, n_eff: usize) -> f64 {
        let n = n_eff as f64;
        match self {
            SizeConvention::TwoSampleEqual => statistic * (n / 2.0).sqrt(),
            SizeConvention::OneSample => statistic * n.sqrt(),
        }
    }
}

pub const SIZE_CONVENTION: SizeConvention = SizeConvention::TwoSampleEqual;

/// Corrected KS statistic before it is converted to a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedStatistic {
    /// KS(M_o, M_u) on the forget set.
    pub s_ouf: f64,
    /// KS(M_o, M_u) on the validation set.
    pub s_ouv: f64,
    pub delta_s: f64,
    pub s_corr: f64,
    /// Size of the unlearned model's forget-set CTCS.
    pub n_eff: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcueResult {
    pub s_ouf: f64,
    pub s_ouv: f64,
    pub delta_s: f64,
    pub s_corr: f64,
    pub n_eff: usize,
    /// KS p-value of the corrected statistic; higher means the forget-set
    /// behaviour is closer to a model that never saw the forget set.
    pub r_dcue: f64,
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// Fine-tuning drift estimate: the validation gap, capped by the forget gap.
pub fn delta_s(s_ouv: f64, s_ouf: f64) -> Result<f64> {
    unit("s_ouv", s_ouv)?;
    unit("s_ouf", s_ouf)?;
    Ok(s_ouv.min(s_ouf))
}

pub fn correct_statistic(
    ctcs_u_f: &CtcsSample,
    ctcs_o_f: &CtcsSample,
    ctcs_u_v: &CtcsSample,
    ctcs_o_v: &CtcsSample,
) -> Result<CorrectedStatistic> {
    for (a, b) in [(ctcs_u_f, ctcs_o_f), (ctcs_u_v, ctcs_o_v)] {
        if a.dataset_id != b.dataset_id {
            return Err(Error::DatasetMismatch {
                left: a.dataset_id.clone(),
                right: b.dataset_id.clone(),
            });
        }
    }
    let s_ouf = ks_statistic(ctcs_o_f.values(), ctcs_u_f.values())?;
    let s_ouv = ks_statistic(ctcs_o_v.values(), ctcs_u_v.values())?;
    let delta = delta_s(s_ouv, s_ouf)?;
    Ok(CorrectedStatistic {
        s_ouf,
        s_ouv,
        delta_s: delta,
        s_corr: s_ouf - delta,
        n_eff: ctcs_u_f.n(),
    })
}

pub fn dcue_score(corrected: CorrectedStatistic) -> Result<DcueResult> {
    unit("s_corr", corrected.s_corr)?;
    if corrected.n_eff == 0 {
        return Err(Error::InvalidArgument("n_eff must be >= 1".into()));
    }
    let adjusted = SIZE_CONVENTION.adjust(corrected.s_corr, corrected.n_eff);
    Ok(DcueResult {
        s_ouf: corrected.s_ouf,
        s_ouv: corrected.s_ouv,
        delta_s: corrected.delta_s,
        s_corr: corrected.s_corr,
        n_eff: corrected.n_eff,
        r_dcue: ks_pvalue(adjusted)?,
    })
}

/// Correction and scoring over four CTCS samples.
pub fn dcue_from_samples(
    ctcs_u_f: &CtcsSample,
    ctcs_o_f: &CtcsSample,
    ctcs_u_v: &CtcsSample,
    ctcs_o_v: &CtcsSample,
) -> Result<DcueResult> {
    dcue_score(correct_statistic(ctcs_u_f, ctcs_o_f, ctcs_u_v, ctcs_o_v)?)
}

fn check_roles(
    log: &TokenScoreLog,
    slot: &'static str,
    models: &[ModelRole],
    model_expected: &'static str,
    dataset: DatasetRole,
) -> Result<()> {
    if !models.contains(&log.model_role) {
        return Err(Error::RoleMismatch {
            slot,
            expected: model_expected,
            found: log.model_role.to_string(),
        });
    }
    if log.dataset_role != dataset && log.dataset_role != DatasetRole::Other {
        return Err(Error::RoleMismatch {
            slot,
            expected: dataset.label(),
            found: log.dataset_role.to_string(),
        });
    }
    Ok(())
}

const EVALUATED: &[ModelRole] = &[
    ModelRole::Unlearned,
    ModelRole::Target,
    ModelRole::Retrained,
    ModelRole::Other,
];
const ORIGINAL: &[ModelRole] = &[ModelRole::Original, ModelRole::Other];

/// Full pipeline from four score logs.
///
/// The evaluated slots accept `M_u`, or `M_t`/`M_r` standing in for it; the
/// reference slots accept `M_o`. Role `other` is accepted everywhere.
pub fn evaluate_dcue(
    log_u_f: &TokenScoreLog,
    log_o_f: &TokenScoreLog,
    log_u_v: &TokenScoreLog,
    log_o_v: &TokenScoreLog,
) -> Result<DcueResult> {
    check_roles(log_u_f, "u_forget", EVALUATED, "M_u", DatasetRole::Forget)?;
    check_roles(log_o_f, "o_forget", ORIGINAL, "M_o", DatasetRole::Forget)?;
    check_roles(
        log_u_v,
        "u_validation",
        EVALUATED,
        "M_u",
        DatasetRole::Validation,
    )?;
    check_roles(
        log_o_v,
        "o_validation",
        ORIGINAL,
        "M_o",
        DatasetRole::Validation,
    )?;
    if log_u_f.model_id != log_u_v.model_id {
        return Err(Error::RoleMismatch {
            slot: "u_validation",
            expected: "the same model as u_forget",
            found: log_u_v.model_id.clone(),
        });
    }
    if log_o_f.model_id != log_o_v.model_id {
        return Err(Error::RoleMismatch {
            slot: "o_validation",
            expected: "the same model as o_forget",
            found: log_o_v.model_id.clone(),
        });
    }
    dcue_from_samples(
        &extract_ctcs(log_u_f)?,
        &extract_ctcs(log_o_f)?,
        &extract_ctcs(log_u_v)?,
        &extract_ctcs(log_o_v)?,
    )
}
