//! Meta-evaluation of unlearning metrics: practicality, exactness and
//! robustness, each normalized by the metric's declared range.

use serde::{Deserialize, Serialize};

use crate::baseline::{metric_spec, MetricSpec};
use crate::error::{Error, Result};

fn check_scale(scale: [f64; 2]) -> Result<f64> {
    let [lo, hi] = scale;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "degenerate metric scale [{lo}, {hi}]"
        )));
    }
    Ok(hi - lo)
}

fn normalized_closeness(a: f64, b: f64, scale: [f64; 2]) -> Result<f64> {
    let range = check_scale(scale)?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("meta-evaluation input"));
    }
    Ok((1.0 - (a - b).abs() / range).clamp(0.0, 1.0))
}

/// `1 - |observed - anchor| / range`, clamped to `[0, 1]`.
pub fn exactness(observed: f64, anchor: f64, scale: [f64; 2]) -> Result<f64> {
    normalized_closeness(observed, anchor, scale)
}

/// `1 - |post - base| / range`, clamped to `[0, 1]`.
pub fn robustness(value_post: f64, value_base: f64, scale: [f64; 2]) -> Result<f64> {
    normalized_closeness(value_post, value_base, scale)
}

/// Scale and anchors used to normalize one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAnchors {
    pub scale: [f64; 2],
    pub ideal: f64,
    pub worst: f64,
    pub requires_retrained: bool,
}

impl From<MetricSpec> for MetricAnchors {
    fn from(s: MetricSpec) -> Self {
        MetricAnchors {
            scale: s.scale,
            ideal: s.ideal,
            worst: s.worst,
            requires_retrained: s.requires_retrained,
        }
    }
}

/// Metric values on each model variant; absent entries stay absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeValues {
    pub m_r: Option<f64>,
    pub m_t: Option<f64>,
    pub m_u: Option<f64>,
    pub post_ul: Option<f64>,
    pub post_ft: Option<f64>,
    pub post_mix: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub metric_name: String,
    pub requires_retrained: bool,
    pub exactness_plus: Option<f64>,
    pub exactness_minus: Option<f64>,
    pub robustness_ul: Option<f64>,
    pub robustness_ft: Option<f64>,
    pub robustness_mix: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl MetaReport {
    pub fn practical(&self) -> bool {
        !self.requires_retrained
    }
}

pub fn build_report(
    metric_name: &str,
    anchors: &MetricAnchors,
    values: &FeValues,
) -> Result<MetaReport> {
    let scale = anchors.scale;
    check_scale(scale)?;
    let [lo, hi] = scale;
    for (what, a) in [("ideal", anchors.ideal), ("worst", anchors.worst)] {
        if !(lo..=hi).contains(&a) {
            return Err(Error::InvalidArgument(format!(
                "{what} anchor {a} of '{metric_name}' lies outside scale [{lo}, {hi}]"
            )));
        }
    }

    let mut diagnostics = Vec::new();
    let mut within = |label: &str, v: Option<f64>| -> Result<Option<f64>> {
        let Some(v) = v else { return Ok(None) };
        if !v.is_finite() {
            return Err(Error::NonFinite("meta-evaluation input"));
        }
        if v < lo || v > hi {
            diagnostics.push(format!(
                "{label} value {v} outside scale [{lo}, {hi}]; clamped"
            ));
            return Ok(Some(v.clamp(lo, hi)));
        }
        Ok(Some(v))
    };
    let m_r = within("M_r", values.m_r)?;
    let m_t = within("M_t", values.m_t)?;
    let m_u = within("M_u", values.m_u)?;
    let ul = within("PostPro_ul", values.post_ul)?;
    let ft = within("PostPro_ft", values.post_ft)?;
    let mix = within("PostPro_mix", values.post_mix)?;

    if m_r.is_none() {
        diagnostics.push("M_r value unavailable; exactness_plus not computed".into());
    }
    if m_t.is_none() {
        diagnostics.push("M_t value unavailable; exactness_minus not computed".into());
    }
    let robust = |post: Option<f64>| -> Result<Option<f64>> {
        match (post, m_u) {
            (Some(p), Some(u)) => robustness(p, u, scale).map(Some),
            _ => Ok(None),
        }
    };

    Ok(MetaReport {
        metric_name: metric_name.to_string(),
        requires_retrained: anchors.requires_retrained,
        exactness_plus: m_r
            .map(|v| exactness(v, anchors.ideal, scale))
            .transpose()?,
        exactness_minus: m_t
            .map(|v| exactness(v, anchors.worst, scale))
            .transpose()?,
        robustness_ul: robust(ul)?,
        robustness_ft: robust(ft)?,
        robustness_mix: robust(mix)?,
        diagnostics,
    })
}

/// One `[[metric]]` block of a meta-evaluation config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaInput {
    pub name: String,
    #[serde(flatten)]
    pub values: FeValues,
    pub scale: Option<[f64; 2]>,
    pub ideal: Option<f64>,
    pub worst: Option<f64>,
    pub requires_retrained: Option<bool>,
}

impl MetaInput {
    /// Registry defaults for known metrics, overridden field by field.
    pub fn anchors(&self) -> Result<MetricAnchors> {
        let base = metric_spec(&self.name).map(MetricAnchors::from);
        let missing = |f: &str| {
            Error::Config(format!(
                "metric '{}' is not built in; '{f}' must be given",
                self.name
            ))
        };
        Ok(MetricAnchors {
            scale: self
                .scale
                .or(base.as_ref().map(|b| b.scale))
                .ok_or_else(|| missing("scale"))?,
            ideal: self
                .ideal
                .or(base.as_ref().map(|b| b.ideal))
                .ok_or_else(|| missing("ideal"))?,
            worst: self
                .worst
                .or(base.as_ref().map(|b| b.worst))
                .ok_or_else(|| missing("worst"))?,
            requires_retrained: self
                .requires_retrained
                .or(base.as_ref().map(|b| b.requires_retrained))
                .unwrap_or(false),
        })
    }

    pub fn report(&self) -> Result<MetaReport> {
        build_report(&self.name, &self.anchors()?, &self.values)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaConfig {
    #[serde(default)]
    metric: Vec<MetaInput>,
}

/// Parses a TOML file of `[[metric]]` blocks. Unknown metrics must carry
/// their own scale and anchors.
pub fn parse_meta_config(text: &str) -> Result<Vec<MetaInput>> {
    let cfg: MetaConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.metric.is_empty() {
        return Err(Error::Config("no [[metric]] entries".into()));
    }
    for input in &cfg.metric {
        let anchors = input.anchors()?;
        check_scale(anchors.scale)
            .map_err(|e| Error::Config(format!("metric '{}': {e}", input.name)))?;
    }
    Ok(cfg.metric)
}

pub const TABLE_COLUMNS: [&str; 7] = [
    "metric",
    "practical",
    "exactness_plus",
    "exactness_minus",
    "robustness_ul",
    "robustness_ft",
    "robustness_mix",
];

/// Tab-separated comparison table, one row per metric.
pub fn render_table(reports: &[MetaReport]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    let mut out = TABLE_COLUMNS.join("\t");
    out.push('\n');
    for r in reports {
        let row = [
            r.metric_name.clone(),
            if r.practical() { "yes" } else { "no" }.to_string(),
            cell(r.exactness_plus),
            cell(r.exactness_minus),
            cell(r.robustness_ul),
            cell(r.robustness_ft),
            cell(r.robustness_mix),
        ];
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
