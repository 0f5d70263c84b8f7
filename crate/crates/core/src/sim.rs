//! Synthetic CTCS scenarios for checking the validation-set correction
//! against the direct comparison with a retrained model.
//!
//! Every item of a dataset draws one uniform latent, and each model role maps
//! that latent through its own quantile function. Roles therefore differ only
//! by their distributions, never by sampling noise. The forget set is drawn
//! once per seed; the validation set is redrawn for every trial.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::dcue::dcue_from_samples;
use crate::error::{Error, Result};
use crate::meta::FeValues;
use crate::score_log::{CtcsSample, ModelRole};
use crate::stats::{ks_two_sample, spearman};

/// Trials whose p-values are closer than this count as agreeing.
pub const AGREEMENT_GAP: f64 = 0.1;

/// Parametric score distribution on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreFamily {
    /// `sigmoid(location + scale * Z)` with `Z` standard normal.
    LogitNormal { location: f64, scale: f64 },
    /// Kumaraswamy(a, b), a closed-form stand-in for the beta family.
    Kumaraswamy { a: f64, b: f64 },
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

impl ScoreFamily {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            ScoreFamily::LogitNormal { location, scale } => {
                location.is_finite() && scale.is_finite() && scale > 0.0
            }
            ScoreFamily::Kumaraswamy { a, b } => {
                a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid parameters for family '{name}': {self:?}"
            )))
        }
    }

    /// Quantile at `u` in `(0, 1)`, kept inside `(0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let v = match *self {
            ScoreFamily::LogitNormal { location, scale } => {
                sigmoid(location + scale * normal_quantile(u))
            }
            ScoreFamily::Kumaraswamy { a, b } => (1.0 - (1.0 - u).powf(1.0 / b)).powf(1.0 / a),
        };
        v.clamp(f64::MIN_POSITIVE, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoleFamilies {
    pub original_forget: ScoreFamily,
    pub original_validation: ScoreFamily,
    pub target_forget: ScoreFamily,
    pub target_validation: ScoreFamily,
    pub retrained_forget: ScoreFamily,
    pub retrained_validation: ScoreFamily,
}

impl Default for RoleFamilies {
    /// The original model is diffuse. Fine-tuning on the retain set nudges
    /// every dataset by the same small logit shift, and the target model has
    /// additionally memorized the forget set.
    fn default() -> Self {
        let diffuse = ScoreFamily::LogitNormal {
            location: 0.0,
            scale: 1.5,
        };
        let shifted = ScoreFamily::LogitNormal {
            location: 0.25,
            scale: 1.5,
        };
        RoleFamilies {
            original_forget: diffuse,
            original_validation: diffuse,
            target_forget: ScoreFamily::LogitNormal {
                location: 4.0,
                scale: 0.8,
            },
            target_validation: shifted,
            retrained_forget: shifted,
            retrained_validation: shifted,
        }
    }
}

/// How the model under evaluation relates to the target and retrained ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMode {
    AsRetrained,
    AsTarget,
    /// Per-item mixture `(1 - α) * target + α * retrained`; α = 1 is full forgetting.
    Interpolated(f64),
}

/// A logit-space affine map applied to the evaluated model's scores,
/// standing in for post-unlearning processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostProcess {
    pub scale: f64,
    pub shift: f64,
}

impl PostProcess {
    /// Further unlearning on unrelated data: a mild confidence drop.
    pub const UL: PostProcess = PostProcess {
        scale: 1.0,
        shift: -0.10,
    };
    /// Fine-tuning on unrelated data: a mild confidence rise with sharpening.
    pub const FT: PostProcess = PostProcess {
        scale: 0.95,
        shift: 0.08,
    };
    /// Both in sequence.
    pub const MIX: PostProcess = PostProcess {
        scale: 0.95,
        shift: -0.02,
    };

    pub fn apply(&self, p: f64) -> f64 {
        if p >= 1.0 {
            return 1.0;
        }
        sigmoid(self.scale * logit(p) + self.shift).clamp(f64::MIN_POSITIVE, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimDataset {
    Forget,
    Validation,
}

fn default_size() -> usize {
    400
}

fn default_trials() -> usize {
    100
}

fn default_u_mode() -> UMode {
    UMode::AsRetrained
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size")]
    pub n_f: usize,
    #[serde(default = "default_size")]
    pub n_v: usize,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_u_mode")]
    pub u_mode: UMode,
    #[serde(default)]
    pub families: RoleFamilies,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            seed: 0,
            n_f: default_size(),
            n_v: default_size(),
            n_trials: default_trials(),
            u_mode: default_u_mode(),
            families: RoleFamilies::default(),
        }
    }
}

/// Stream 0 is the forget set; validation trial `t` uses stream `t + 1`.
fn stream_id(dataset: SimDataset, trial_index: usize) -> u64 {
    match dataset {
        SimDataset::Forget => 0,
        SimDataset::Validation => trial_index as u64 + 1,
    }
}

/// Per-item values of every role on one dataset draw.
struct Draw {
    original: Vec<f64>,
    target: Vec<f64>,
    retrained: Vec<f64>,
    evaluated: Vec<f64>,
    dataset_id: String,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_f < 2 || self.n_v < 2 {
            return Err(Error::Config(format!(
                "sample sizes must be >= 2 (n_f = {}, n_v = {})",
                self.n_f, self.n_v
            )));
        }
        if let UMode::Interpolated(a) = self.u_mode {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!(
                    "interpolation weight {a} outside [0, 1]"
                )));
            }
        }
        let f = &self.families;
        for (name, fam) in [
            ("original_forget", f.original_forget),
            ("original_validation", f.original_validation),
            ("target_forget", f.target_forget),
            ("target_validation", f.target_validation),
            ("retrained_forget", f.retrained_forget),
            ("retrained_validation", f.retrained_validation),
        ] {
            fam.validate(name)?;
        }
        Ok(())
    }

    pub fn with_u_mode(&self, u_mode: UMode) -> SimScenario {
        SimScenario {
            u_mode,
            ..self.clone()
        }
    }

    fn latents(&self, dataset: SimDataset, trial_index: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream_id(dataset, trial_index));
        let n = match dataset {
            SimDataset::Forget => self.n_f,
            SimDataset::Validation => self.n_v,
        };
        (0..n).map(|_| rng.sample(Open01)).collect()
    }

    fn draw(&self, dataset: SimDataset, trial_index: usize) -> Draw {
        let f = &self.families;
        let (o, t, r) = match dataset {
            SimDataset::Forget => (f.original_forget, f.target_forget, f.retrained_forget),
            SimDataset::Validation => (
                f.original_validation,
                f.target_validation,
                f.retrained_validation,
            ),
        };
        let latents = self.latents(dataset, trial_index);
        let map = |fam: ScoreFamily| latents.iter().map(|&u| fam.quantile(u)).collect::<Vec<_>>();
        let (original, target, retrained) = (map(o), map(t), map(r));
        let evaluated = match self.u_mode {
            UMode::AsRetrained => retrained.clone(),
            UMode::AsTarget => target.clone(),
            UMode::Interpolated(a) => target
                .iter()
                .zip(&retrained)
                .map(|(&t, &r)| ((1.0 - a) * t + a * r).clamp(f64::MIN_POSITIVE, 1.0))
                .collect(),
        };
        let dataset_id = match dataset {
            SimDataset::Forget => "sim_forget".to_string(),
            SimDataset::Validation => format!("sim_validation_{trial_index}"),
        };
        Draw {
            original,
            target,
            retrained,
            evaluated,
            dataset_id,
        }
    }
}

/// Parses and validates a TOML scenario file.
pub fn parse_scenario(text: &str) -> Result<SimScenario> {
    let s: SimScenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &std::path::Path) -> Result<SimScenario> {
    parse_scenario(&crate::jsonl::read_to_string(path)?)
}

fn sample(role: ModelRole, dataset_id: &str, values: Vec<f64>) -> Result<CtcsSample> {
    CtcsSample::new(format!("sim_{}", role.label()), dataset_id, values)
}

/// Synthetic CTCS for one role on one dataset draw. `trial_index` only
/// matters for the validation set.
pub fn gen_synthetic_ctcs(
    scenario: &SimScenario,
    role: ModelRole,
    dataset: SimDataset,
    trial_index: usize,
) -> Result<CtcsSample> {
    scenario.validate()?;
    let d = scenario.draw(dataset, trial_index);
    let values = match role {
        ModelRole::Original => d.original,
        ModelRole::Target => d.target,
        ModelRole::Retrained => d.retrained,
        ModelRole::Unlearned => d.evaluated,
        ModelRole::Other => {
            return Err(Error::InvalidArgument(
                "simulator roles are M_o, M_t, M_r and M_u".into(),
            ))
        }
    };
    sample(role, &d.dataset_id, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialComparison {
    pub trial_index: usize,
    /// Two-sample KS p-value of the evaluated model against the retrained one.
    pub p_direct: f64,
    /// Corrected score computed without the retrained model.
    pub p_approx: f64,
}

impl TrialComparison {
    pub fn agrees(&self, alpha: f64) -> bool {
        (self.p_direct < alpha) == (self.p_approx < alpha)
            || (self.p_direct - self.p_approx).abs() < AGREEMENT_GAP
    }
}

fn corrected_score(
    scenario: &SimScenario,
    forget: &Draw,
    validation: &Draw,
    post: Option<PostProcess>,
) -> Result<f64> {
    let eval = |d: &Draw| -> Vec<f64> {
        match post {
            Some(p) => d.evaluated.iter().map(|&v| p.apply(v)).collect(),
            None => d.evaluated.clone(),
        }
    };
    let u_f = sample(ModelRole::Unlearned, &forget.dataset_id, eval(forget))?;
    let o_f = sample(
        ModelRole::Original,
        &forget.dataset_id,
        forget.original.clone(),
    )?;
    let u_v = sample(
        ModelRole::Unlearned,
        &validation.dataset_id,
        eval(validation),
    )?;
    let o_v = sample(
        ModelRole::Original,
        &validation.dataset_id,
        validation.original.clone(),
    )?;
    debug_assert_eq!(u_f.n(), scenario.n_f);
    Ok(dcue_from_samples(&u_f, &o_f, &u_v, &o_v)?.r_dcue)
}

pub fn compare_direct_vs_approx(
    scenario: &SimScenario,
    trial_index: usize,
) -> Result<TrialComparison> {
    scenario.validate()?;
    let forget = scenario.draw(SimDataset::Forget, 0);
    compare_with_forget(scenario, &forget, trial_index)
}

fn compare_with_forget(
    scenario: &SimScenario,
    forget: &Draw,
    trial_index: usize,
) -> Result<TrialComparison> {
    let validation = scenario.draw(SimDataset::Validation, trial_index);
    let p_direct = ks_two_sample(&forget.evaluated, &forget.retrained)?.p_value;
    let p_approx = corrected_score(scenario, forget, &validation, None)?;
    Ok(TrialComparison {
        trial_index,
        p_direct,
        p_approx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub alpha: f64,
    pub trials: usize,
    pub agreement_count: usize,
    pub pairs: Vec<TrialComparison>,
}

impl ValidationReport {
    pub fn median_gap(&self) -> Option<f64> {
        let mut gaps: Vec<f64> = self
            .pairs
            .iter()
            .map(|p| (p.p_direct - p.p_approx).abs())
            .collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        let m = gaps.len() / 2;
        Some(if gaps.len() % 2 == 1 {
            gaps[m]
        } else {
            (gaps[m - 1] + gaps[m]) / 2.0
        })
    }
}

/// Runs every trial (in parallel, results in trial order) and counts agreements.
pub fn run_validation(scenario: &SimScenario, alpha: f64) -> Result<ValidationReport> {
    scenario.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let forget = scenario.draw(SimDataset::Forget, 0);
    let pairs = (0..scenario.n_trials)
        .into_par_iter()
        .map(|t| compare_with_forget(scenario, &forget, t))
        .collect::<Result<Vec<_>>>()?;
    let agreement_count = pairs.iter().filter(|p| p.agrees(alpha)).count();
    Ok(ValidationReport {
        alpha,
        trials: pairs.len(),
        agreement_count,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub r_dcue: f64,
}

/// Corrected score at each interpolation weight, on shared draws so only the
/// weight varies.
pub fn alpha_sweep(
    scenario: &SimScenario,
    weights: &[f64],
    trial_index: usize,
) -> Result<Vec<SweepPoint>> {
    weights
        .iter()
        .map(|&a| {
            let s = scenario.with_u_mode(UMode::Interpolated(a));
            s.validate()?;
            let forget = s.draw(SimDataset::Forget, 0);
            let validation = s.draw(SimDataset::Validation, trial_index);
            Ok(SweepPoint {
                alpha: a,
                r_dcue: corrected_score(&s, &forget, &validation, None)?,
            })
        })
        .collect()
}

/// Spearman correlation between weight and score over one sweep.
pub fn sweep_rank_correlation(points: &[SweepPoint]) -> Option<f64> {
    let x: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    let y: Vec<f64> = points.iter().map(|p| p.r_dcue).collect();
    spearman(&x, &y)
}

/// Mean corrected score over all trials, optionally after post-processing.
fn mean_score(scenario: &SimScenario, post: Option<PostProcess>) -> Result<f64> {
    if scenario.n_trials == 0 {
        return Err(Error::InvalidArgument(
            "n_trials must be >= 1 to average scores".into(),
        ));
    }
    let forget = scenario.draw(SimDataset::Forget, 0);
    let scores = (0..scenario.n_trials)
        .into_par_iter()
        .map(|t| {
            corrected_score(
                scenario,
                &forget,
                &scenario.draw(SimDataset::Validation, t),
                post,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Metric values of the corrected score on the simulated model variants:
/// the retrained and target stand-ins, and the retrained stand-in as the
/// evaluated model before and after each post-processing map.
pub fn dcue_meta_values(scenario: &SimScenario) -> Result<FeValues> {
    scenario.validate()?;
    let retrained = scenario.with_u_mode(UMode::AsRetrained);
    let target = scenario.with_u_mode(UMode::AsTarget);
    let m_r = mean_score(&retrained, None)?;
    Ok(FeValues {
        m_r: Some(m_r),
        m_t: Some(mean_score(&target, None)?),
        m_u: Some(m_r),
        post_ul: Some(mean_score(&retrained, Some(PostProcess::UL))?),
        post_ft: Some(mean_score(&retrained, Some(PostProcess::FT))?),
        post_mix: Some(mean_score(&retrained, Some(PostProcess::MIX))?),
    })
}
