use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use unlearn_gauge::baseline::{
    self, load_generation_log, load_truth_ratio_log, MetricScore, TextSimKind,
};
use unlearn_gauge::dcue::{evaluate_dcue, DcueResult};
use unlearn_gauge::losses::{load_bundles, LossKind};
use unlearn_gauge::meta::{build_report, parse_meta_config, render_table, MetricAnchors};
use unlearn_gauge::score_log::{load_dataset, load_score_log};
use unlearn_gauge::sim::{
    alpha_sweep, dcue_meta_values, load_scenario, run_validation, sweep_rank_correlation,
    SimScenario, UMode,
};
use unlearn_gauge::Error;

mod output;

use output::{jsonl, key_values, records_to_tables, tagged, Format};

const THREADS_ENV: &str = "UNLEARN_GAUGE_THREADS";

/// Evaluate machine-unlearning claims from token score logs.
#[derive(Debug, Parser)]
#[command(name = "unlearn-gauge", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Significance level for accept/reject decisions.
    #[arg(long, global = true, default_value_t = 0.05)]
    alpha: f64,
    /// Percentage of lowest-probability tokens used by Min-K% Prob.
    #[arg(long, global = true, default_value_t = 20.0)]
    k_percent: f64,
    /// Seed for every random draw; overrides the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that input files parse and satisfy their invariants.
    Validate {
        #[arg(long, value_enum, default_value_t = FileKind::ScoreLog)]
        kind: FileKind,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Score an unlearned model against the original with validation-set correction.
    Dcue {
        #[arg(long)]
        u_forget: PathBuf,
        #[arg(long)]
        o_forget: PathBuf,
        #[arg(long)]
        u_validation: PathBuf,
        #[arg(long)]
        o_validation: PathBuf,
    },
    /// Compute one of the existing unlearning metrics.
    Baseline(BaselineArgs),
    /// Exactness and robustness of metrics from their values on model variants.
    Meta {
        /// TOML file of [[metric]] blocks.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the synthetic validation of the corrected score.
    Simulate(SimulateArgs),
    /// Mean unlearning losses over likelihood bundles.
    Losses {
        #[arg(long)]
        bundles: PathBuf,
        /// Restrict to one loss; by default every loss whose inputs are present.
        #[arg(long)]
        loss: Option<String>,
    },
    /// Render saved JSONL results as tables.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FileKind {
    ScoreLog,
    Dataset,
    Generation,
    TruthRatio,
    Scenario,
    Bundles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricName {
    Qa,
    Fb,
    Aa,
    VerbMem,
    KnowMem,
    QaEval,
    ProbEval,
    TrEval,
    Privleak,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    metric: MetricName,
    /// Generation log of the evaluated model.
    #[arg(long)]
    gen: Option<PathBuf>,
    /// Truth ratios of the evaluated model.
    #[arg(long)]
    tr_u: Option<PathBuf>,
    /// Truth ratios of the retrained model.
    #[arg(long)]
    tr_r: Option<PathBuf>,
    #[arg(long)]
    u_forget: Option<PathBuf>,
    #[arg(long)]
    u_holdout: Option<PathBuf>,
    #[arg(long)]
    r_forget: Option<PathBuf>,
    #[arg(long)]
    r_holdout: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML scenario; built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// as-retrained, as-target, or interpolated:<weight>.
    #[arg(long, value_parser = parse_u_mode)]
    u_mode: Option<UMode>,
    /// Sweep the interpolation weight over 0, 0.1, ..., 1 instead.
    #[arg(long, conflicts_with = "meta")]
    sweep: bool,
    /// Report exactness and robustness of the corrected score instead.
    #[arg(long)]
    meta: bool,
}

fn parse_u_mode(s: &str) -> std::result::Result<UMode, String> {
    match s {
        "as-retrained" | "as_retrained" => Ok(UMode::AsRetrained),
        "as-target" | "as_target" => Ok(UMode::AsTarget),
        _ => {
            let w = s
                .strip_prefix("interpolated:")
                .ok_or_else(|| format!("unknown mode '{s}'"))?;
            w.parse::<f64>()
                .map(UMode::Interpolated)
                .map_err(|e| format!("bad interpolation weight '{w}': {e}"))
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring worker threads")?;
    Ok(())
}

fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A single result record, as key/value lines or one JSON line.
fn render_one(global: &Global, record: Value) -> String {
    match global.format {
        Format::Table => key_values(&record),
        Format::Jsonl => jsonl(&[record]),
    }
}

fn render_many(global: &Global, records: &[Value]) -> String {
    match global.format {
        Format::Table => records_to_tables(records),
        Format::Jsonl => jsonl(records),
    }
}

fn validate_file(kind: FileKind, path: &Path) -> unlearn_gauge::Result<String> {
    Ok(match kind {
        FileKind::ScoreLog => {
            let log = load_score_log(path)?;
            format!(
                "{} entries, model {} ({}), dataset {} ({})",
                log.len(),
                log.model_id,
                log.model_role,
                log.dataset_id,
                log.dataset_role
            )
        }
        FileKind::Dataset => format!("{} records", load_dataset(path)?.len()),
        FileKind::Generation => {
            let g = load_generation_log(path)?;
            format!("{} entries, model {}", g.entries().len(), g.model_id)
        }
        FileKind::TruthRatio => {
            let t = load_truth_ratio_log(path)?;
            format!("{} entries, model {}", t.values().len(), t.model_id)
        }
        FileKind::Scenario => {
            let s = load_scenario(path)?;
            format!("seed {}, {} trials", s.seed, s.n_trials)
        }
        FileKind::Bundles => format!("{} bundles", load_bundles(path)?.len()),
    })
}

fn cmd_validate(global: &Global, kind: FileKind, paths: &[PathBuf]) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        path: String,
        status: &'a str,
        detail: String,
    }
    let mut rows = Vec::new();
    let mut failures = 0;
    for path in paths {
        let (status, detail) = match validate_file(kind, path) {
            Ok(summary) => ("ok", summary),
            Err(e) => {
                failures += 1;
                ("invalid", e.to_string())
            }
        };
        rows.push(tagged(
            "validation",
            &Row {
                path: path.display().to_string(),
                status,
                detail,
            },
        ));
    }
    emit(global, &render_many(global, &rows))?;
    if failures > 0 {
        bail!("{failures} of {} files failed validation", paths.len());
    }
    Ok(())
}

fn cmd_dcue(global: &Global, paths: [&Path; 4]) -> Result<()> {
    let logs = paths
        .iter()
        .map(|p| load_score_log(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let result = evaluate_dcue(&logs[0], &logs[1], &logs[2], &logs[3])?;

    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        result: DcueResult,
        alpha: f64,
        /// The forget set is still distinguishable at level alpha.
        residual_knowledge: bool,
    }
    let out = Out {
        result,
        alpha: global.alpha,
        residual_knowledge: result.r_dcue < global.alpha,
    };
    emit(global, &render_one(global, tagged("dcue", &out)))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, metric: MetricName) -> Result<&'a Path> {
    p.as_deref().with_context(|| {
        let name = metric.to_possible_value().expect("no skipped variants");
        format!("{} needs --{flag}", name.get_name())
    })
}

fn cmd_baseline(global: &Global, args: &BaselineArgs) -> Result<()> {
    let m = args.metric;
    let gen = || -> Result<_> { Ok(load_generation_log(need(&args.gen, "gen", m)?)?) };
    let score: MetricScore = match m {
        MetricName::Qa => baseline::text_sim_metric(&gen()?, TextSimKind::Qa)?,
        MetricName::Fb => baseline::text_sim_metric(&gen()?, TextSimKind::Fb)?,
        MetricName::Aa => baseline::text_sim_metric(&gen()?, TextSimKind::Aa)?,
        MetricName::VerbMem => baseline::verb_mem(&gen()?)?,
        MetricName::KnowMem => baseline::know_mem(&gen()?)?,
        MetricName::QaEval => baseline::qa_eval_accuracy(&gen()?)?,
        MetricName::ProbEval => baseline::prob_eval_accuracy(&gen()?)?,
        MetricName::TrEval => {
            let tr_u = load_truth_ratio_log(need(&args.tr_u, "tr-u", m)?)?;
            let tr_r = args.tr_r.as_deref().map(load_truth_ratio_log).transpose()?;
            baseline::tr_eval(tr_r.as_ref(), &tr_u)?
        }
        MetricName::Privleak => {
            let (Some(r_f), Some(r_h)) = (&args.r_forget, &args.r_holdout) else {
                return Err(Error::RequiresRetrained {
                    metric: "privleak".into(),
                    detail: "pass --r-forget and --r-holdout score logs of the retrained model"
                        .into(),
                }
                .into());
            };
            let k = global.k_percent;
            let u_f = load_score_log(need(&args.u_forget, "u-forget", m)?)?;
            let u_h = load_score_log(need(&args.u_holdout, "u-holdout", m)?)?;
            let auc_u = baseline::mia_auc(&u_f, &u_h, k)?;
            let auc_r = baseline::mia_auc(&load_score_log(r_f)?, &load_score_log(r_h)?, k)?;
            baseline::privleak(auc_u, auc_r)?
        }
    };
    emit(global, &render_one(global, tagged("metric", &score)))
}

fn cmd_meta(global: &Global, config: &Path) -> Result<()> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let reports = parse_meta_config(&text)?
        .iter()
        .map(|input| input.report())
        .collect::<unlearn_gauge::Result<Vec<_>>>()?;
    for r in &reports {
        for d in &r.diagnostics {
            eprintln!("{}: {d}", r.metric_name);
        }
    }
    let text = match global.format {
        Format::Table => render_table(&reports),
        Format::Jsonl => jsonl(
            &reports
                .iter()
                .map(|r| tagged("meta", r))
                .collect::<Vec<_>>(),
        ),
    };
    emit(global, &text)
}

fn cmd_simulate(global: &Global, args: &SimulateArgs) -> Result<()> {
    let mut scenario = match &args.scenario {
        Some(p) => load_scenario(p)?,
        None => SimScenario::default(),
    };
    if let Some(seed) = global.seed {
        scenario.seed = seed;
    }
    if let Some(t) = args.trials {
        scenario.n_trials = t;
    }
    if let Some(mode) = args.u_mode {
        scenario.u_mode = mode;
    }
    scenario.validate()?;

    let records = if args.sweep {
        let weights: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
        let points = alpha_sweep(&scenario, &weights, 0)?;
        let mut recs: Vec<Value> = points.iter().map(|p| tagged("sweep_point", p)).collect();
        #[derive(Serialize)]
        struct Summary {
            seed: u64,
            spearman: Option<f64>,
        }
        recs.push(tagged(
            "sweep_summary",
            &Summary {
                seed: scenario.seed,
                spearman: sweep_rank_correlation(&points),
            },
        ));
        recs
    } else if args.meta {
        let values = dcue_meta_values(&scenario)?;
        let anchors =
            MetricAnchors::from(baseline::metric_spec("dcue").expect("dcue is registered"));
        let report = build_report("dcue", &anchors, &values)?;
        if global.format == Format::Table {
            return emit(global, &render_table(&[report]));
        }
        vec![tagged("meta", &report)]
    } else {
        let report = run_validation(&scenario, global.alpha)?;
        let mut recs: Vec<Value> = report
            .pairs
            .iter()
            .map(|p| {
                let mut v = tagged("trial", p);
                v["agree"] = Value::Bool(p.agrees(report.alpha));
                v
            })
            .collect();
        #[derive(Serialize)]
        struct Summary {
            seed: u64,
            alpha: f64,
            trials: usize,
            agreement_count: usize,
            median_gap: Option<f64>,
        }
        recs.push(tagged(
            "validation_summary",
            &Summary {
                seed: scenario.seed,
                alpha: report.alpha,
                trials: report.trials,
                agreement_count: report.agreement_count,
                median_gap: report.median_gap(),
            },
        ));
        recs
    };
    emit(global, &render_many(global, &records))
}

fn cmd_losses(global: &Global, bundles: &Path, only: Option<&str>) -> Result<()> {
    let bundles = load_bundles(bundles)?;
    let kinds: Vec<LossKind> = match only {
        Some(name) => vec![LossKind::from_label(name).with_context(|| {
            format!("unknown loss '{name}' (expected ga, gd, idk, dpo, npo or simnpo)")
        })?],
        None => LossKind::ALL.to_vec(),
    };

    #[derive(Serialize)]
    struct Row {
        loss: &'static str,
        mean: Option<f64>,
        count: usize,
        note: Option<String>,
    }
    let mut rows = Vec::new();
    for kind in kinds {
        let row = match unlearn_gauge::losses::mean_loss(kind, &bundles) {
            Ok(mean) => Row {
                loss: kind.label(),
                mean: Some(mean),
                count: bundles.len(),
                note: None,
            },
            Err(e @ Error::MissingField { .. }) if only.is_none() => Row {
                loss: kind.label(),
                mean: None,
                count: 0,
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(tagged("loss", &row));
    }
    emit(global, &render_many(global, &rows))
}

fn cmd_report(global: &Global, paths: &[PathBuf]) -> Result<()> {
    let mut records = Vec::new();
    for path in paths {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(line)
                .with_context(|| format!("{}:{}: not a JSON record", path.display(), i + 1))?;
            if !v.is_object() {
                bail!("{}:{}: expected a JSON object", path.display(), i + 1);
            }
            records.push(v);
        }
    }
    let text = match global.format {
        Format::Table => records_to_tables(&records),
        Format::Jsonl => jsonl(&records),
    };
    emit(global, &text)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1), got {}", g.alpha);
    }
    if !(g.k_percent > 0.0 && g.k_percent <= 100.0) {
        bail!("--k-percent must lie in (0, 100], got {}", g.k_percent);
    }
    configure_threads()?;
    match &cli.command {
        Command::Validate { kind, paths } => cmd_validate(g, *kind, paths),
        Command::Dcue {
            u_forget,
            o_forget,
            u_validation,
            o_validation,
        } => cmd_dcue(
            g,
            [u_forget, o_forget, u_validation, o_validation].map(PathBuf::as_path),
        ),
        Command::Baseline(args) => cmd_baseline(g, args),
        Command::Meta { config } => cmd_meta(g, config),
        Command::Simulate(args) => cmd_simulate(g, args),
        Command::Losses { bundles, loss } => cmd_losses(g, bundles, loss.as_deref()),
        Command::Report { paths } => cmd_report(g, paths),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
