//! Per-example unlearning objectives evaluated over supplied likelihoods.
//!
//! Likelihood ratios are read as `r = exp(-nll_theta) / exp(-nll_ref)`, so
//! `log r = nll_ref - nll_theta`. Expectations over a dataset are left to the
//! caller; [`mean_loss`] is the plain average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodBundle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_id: Option<String>,
    pub nll_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nll_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nll_retain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nll_idk: Option<f64>,
    /// Reference-model NLL of the refusal answer, used by the DPO idk branch.
    /// Falls back to `nll_ref` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nll_idk_ref: Option<f64>,
    pub answer_len: u32,
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl LikelihoodBundle {
    pub fn new(nll_theta: f64, answer_len: u32, beta: f64) -> Self {
        LikelihoodBundle {
            record_id: None,
            nll_theta,
            nll_ref: None,
            nll_retain: None,
            nll_idk: None,
            nll_idk_ref: None,
            answer_len,
            beta,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nll_theta.is_finite() && self.nll_theta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "nll_theta must be finite and >= 0, got {}",
                self.nll_theta
            )));
        }
        if let Some(r) = self.nll_ref {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "nll_ref must be finite and >= 0, got {r}"
                )));
            }
        }
        for (name, v) in [
            ("nll_retain", self.nll_retain),
            ("nll_idk", self.nll_idk),
            ("nll_idk_ref", self.nll_idk_ref),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.answer_len == 0 {
            return Err(Error::InvalidArgument("answer_len must be >= 1".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidArgument("gamma must be finite".into()));
        }
        Ok(())
    }

    fn need(&self, field: &'static str, v: Option<f64>, loss: &str) -> Result<f64> {
        v.ok_or_else(|| Error::MissingField {
            field,
            context: format!("{loss} loss"),
        })
    }

    /// `log r_y = nll_ref - nll_theta`.
    fn log_ratio_answer(&self, loss: &str) -> Result<f64> {
        Ok(self.need("nll_ref", self.nll_ref, loss)? - self.nll_theta)
    }
}

/// `log σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("loss value"))
    }
}

/// Gradient ascent: the forget NLL itself, to be maximized by the caller.
pub fn ga_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    finite(b.nll_theta)
}

/// Gradient difference: `-nll_theta + nll_retain`.
pub fn gd_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    let retain = b.need("nll_retain", b.nll_retain, "gd")?;
    finite(-b.nll_theta + retain)
}

/// Refusal tuning: NLL of the "I don't know" answer.
pub fn idk_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    finite(b.need("nll_idk", b.nll_idk, "idk")?)
}

/// `-(1/β) log σ(β (log r_y - log r_idk))`.
pub fn dpo_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    let log_r_y = b.log_ratio_answer("dpo")?;
    let nll_idk = b.need("nll_idk", b.nll_idk, "dpo")?;
    let idk_ref = b.nll_idk_ref.or(b.nll_ref).expect("nll_ref checked above");
    let log_r_idk = idk_ref - nll_idk;
    finite(-log_sigmoid(b.beta * (log_r_y - log_r_idk)) / b.beta)
}

/// `-(2/β) log σ(-β log r_y)`.
pub fn npo_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    let log_r_y = b.log_ratio_answer("npo")?;
    finite(-2.0 / b.beta * log_sigmoid(-b.beta * log_r_y))
}

/// `-(2/β) log σ(-(β/|y|) log r_y - γ)`.
pub fn simnpo_loss(b: &LikelihoodBundle) -> Result<f64> {
    b.validate()?;
    let log_r_y = b.log_ratio_answer("simnpo")?;
    let arg = -(b.beta / f64::from(b.answer_len)) * log_r_y - b.gamma;
    finite(-2.0 / b.beta * log_sigmoid(arg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ga,
    Gd,
    Idk,
    Dpo,
    Npo,
    Simnpo,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Ga,
        LossKind::Gd,
        LossKind::Idk,
        LossKind::Dpo,
        LossKind::Npo,
        LossKind::Simnpo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LossKind::Ga => "ga",
            LossKind::Gd => "gd",
            LossKind::Idk => "idk",
            LossKind::Dpo => "dpo",
            LossKind::Npo => "npo",
            LossKind::Simnpo => "simnpo",
        }
    }

    pub fn from_label(s: &str) -> Option<LossKind> {
        LossKind::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn evaluate(self, b: &LikelihoodBundle) -> Result<f64> {
        match self {
            LossKind::Ga => ga_loss(b),
            LossKind::Gd => gd_loss(b),
            LossKind::Idk => idk_loss(b),
            LossKind::Dpo => dpo_loss(b),
            LossKind::Npo => npo_loss(b),
            LossKind::Simnpo => simnpo_loss(b),
        }
    }
}

/// Mean loss over bundles; errors on an empty slice or any failing bundle.
pub fn mean_loss(kind: LossKind, bundles: &[LikelihoodBundle]) -> Result<f64> {
    if bundles.is_empty() {
        return Err(Error::EmptySample("likelihood bundles".into()));
    }
    let mut sum = 0.0;
    for b in bundles {
        sum += kind.evaluate(b)?;
    }
    finite(sum / bundles.len() as f64)
}

/// One bundle per JSONL line.
pub fn parse_bundles(text: &str) -> Result<Vec<LikelihoodBundle>> {
    let mut out = Vec::new();
    for (line_no, line) in jsonl::numbered_lines(text) {
        let b: LikelihoodBundle = jsonl::parse_line(line_no, line)?;
        b.validate()
            .map_err(|e| Error::malformed(line_no, e.to_string()))?;
        out.push(b);
    }
    if out.is_empty() {
        return Err(Error::EmptySample("likelihood bundle file".into()));
    }
    Ok(out)
}

pub fn load_bundles(path: &std::path::Path) -> Result<Vec<LikelihoodBundle>> {
    parse_bundles(&jsonl::read_to_string(path)?)
}
