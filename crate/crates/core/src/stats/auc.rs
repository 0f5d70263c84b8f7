use crate::error::Result;

use super::check_sample;

/// Probability that a random member score exceeds a random non-member
/// score, with ties credited one half (the Mann–Whitney form of ROC AUC).
pub fn auc_roc(member_scores: &[f64], nonmember_scores: &[f64]) -> Result<f64> {
    check_sample(member_scores, "member scores")?;
    check_sample(nonmember_scores, "non-member scores")?;
    let mut negatives = nonmember_scores.to_vec();
    negatives.sort_by(f64::total_cmp);

    // twice the U statistic, so tie credit stays integral
    let mut twice_u: u128 = 0;
    for &s in member_scores {
        let below = negatives.partition_point(|&v| v < s);
        let not_above = negatives.partition_point(|&v| v <= s);
        twice_u += 2 * below as u128 + (not_above - below) as u128;
    }
    let pairs = 2 * member_scores.len() as u128 * nonmember_scores.len() as u128;
    Ok(twice_u as f64 / pairs as f64)
}
