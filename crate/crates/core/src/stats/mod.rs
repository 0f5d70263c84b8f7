//! Numerical kernel shared by DCUE and the baseline metrics.

mod auc;
mod ecdf;
mod ks;
mod rank;
mod rouge;

pub use auc::auc_roc;
pub use ecdf::ecdf_eval;
pub use ks::{ks_pvalue, ks_statistic, ks_two_sample, size_adjusted, KsResult};
pub use rank::spearman;
pub use rouge::{lcs_len, rouge_l, rouge_l_text, text_tokens, RougeMode};

use crate::error::{Error, Result};

pub(crate) fn check_sample(sample: &[f64], what: &str) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample(what.to_string()));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(format!("{what} contains NaN")));
    }
    Ok(())
}
