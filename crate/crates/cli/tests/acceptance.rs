//! Acceptance gate. Runs without the libtest harness so the PASS/FAIL line
//! for every criterion is always printed; exits nonzero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unlearn_gauge::baseline::metric_spec;
use unlearn_gauge::losses::{dpo_loss, npo_loss, simnpo_loss, LikelihoodBundle};
use unlearn_gauge::meta::{build_report, exactness, robustness, MetricAnchors};
use unlearn_gauge::sim::{
    alpha_sweep, dcue_meta_values, run_validation, sweep_rank_correlation, SimScenario, UMode,
};
use unlearn_gauge::stats::{auc_roc, ks_pvalue, ks_statistic, rouge_l, RougeMode};

struct Gate {
    results: Vec<(String, bool, String)>,
}

impl Gate {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Result<String, String>) {
        let (ok, detail) = match f() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.results.push((name.to_string(), ok, detail));
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(
    budget: Duration,
    f: impl FnOnce() -> Result<T, String>,
) -> Result<(T, Duration), String> {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    ensure(took < budget, || {
        format!("took {took:?}, budget {budget:?}")
    })?;
    Ok((out, took))
}

/// Compensated sum of the alternating KS series out to 10 000 terms.
fn ks_series_reference(x: f64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 1..=10_000u32 {
        let kf = f64::from(k);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (-2.0 * kf * kf * x * x).exp();
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
    }
    2.0 * (sum + comp)
}

/// Largest ECDF gap found by counting, for every pooled point, how many
/// values of each sample lie at or below it. Returned as the exact ratio
/// `max |i*m - j*n| / (n*m)`.
fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as i128, b.len() as i128);
    let mut best = 0i128;
    for &x in a.iter().chain(b) {
        let i = a.iter().filter(|&&v| v <= x).count() as i128;
        let j = b.iter().filter(|&&v| v <= x).count() as i128;
        best = best.max((i * m - j * n).abs());
    }
    best as f64 / (n * m) as f64
}

fn lcs_table(a: &[u8], b: &[u8]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn auc_pairs(members: &[f64], nonmembers: &[f64]) -> f64 {
    let mut score = 0.0;
    for &p in members {
        for &q in nonmembers {
            if p > q {
                score += 1.0;
            } else if p == q {
                score += 0.5;
            }
        }
    }
    score / (members.len() * nonmembers.len()) as f64
}

#[allow(clippy::excessive_precision)]
fn criterion_ks_kernel() -> Result<String, String> {
    let ((), took) = timed(Duration::from_secs(5), || {
        // High-precision values of the same series.
        let frozen = [
            (1.22, 0.101_897_779_166_063_544_8),
            (1.36, 0.049_485_876_755_377_909_94),
            (1.63, 0.009_846_364_888_486_524_409),
        ];
        for (x, exact) in frozen {
            let p = ks_pvalue(x).map_err(|e| e.to_string())?;
            let reference = ks_series_reference(x);
            ensure(
                (p - exact).abs() < 1e-9 && (p - reference).abs() < 1e-9,
                || format!("Q({x}) = {p}, expected {exact} (series {reference})"),
            )?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for pair in 0..200 {
            let n = rng.random_range(1..=60);
            let m = rng.random_range(1..=60);
            // Coarse grid so ties between and within samples are common.
            let a: Vec<f64> = (0..n)
                .map(|_| f64::from(rng.random_range(0..25u32)) / 24.0)
                .collect();
            let b: Vec<f64> = (0..m)
                .map(|_| f64::from(rng.random_range(0..25u32)) / 24.0)
                .collect();
            let fast = ks_statistic(&a, &b).map_err(|e| e.to_string())?;
            let brute = ks_brute(&a, &b);
            ensure(fast == brute, || {
                format!("pair {pair}: {fast} vs oracle {brute}")
            })?;
        }
        Ok(())
    })?;
    Ok(format!(
        "3 reference points within 1e-9, 200/200 statistics exact, {took:?}"
    ))
}

fn criterion_agreement() -> Result<String, String> {
    let (counts, took) = timed(Duration::from_secs(30), || {
        let mut counts = Vec::new();
        for mode in [UMode::AsRetrained, UMode::AsTarget] {
            let s = SimScenario {
                seed: 2025,
                u_mode: mode,
                ..SimScenario::default()
            };
            ensure(s.n_f == 400 && s.n_v == 400 && s.n_trials == 100, || {
                "defaults changed".into()
            })?;
            let r = run_validation(&s, 0.05).map_err(|e| e.to_string())?;
            ensure(r.trials == 100 && r.agreement_count >= 99, || {
                format!("{mode:?}: {}/{} agree", r.agreement_count, r.trials)
            })?;
            if mode == UMode::AsRetrained {
                let gap = r.median_gap().unwrap();
                ensure(gap < 0.15, || format!("median gap {gap}"))?;
            }
            counts.push(r.agreement_count);
        }
        Ok(counts)
    })?;
    Ok(format!(
        "as_retrained {}/100, as_target {}/100, {took:?}",
        counts[0], counts[1]
    ))
}

fn criterion_dcue_meta_row() -> Result<String, String> {
    let (report, took) = timed(Duration::from_secs(60), || {
        let values = dcue_meta_values(&SimScenario {
            seed: 7,
            ..SimScenario::default()
        })
        .map_err(|e| e.to_string())?;
        let anchors = MetricAnchors::from(metric_spec("dcue").unwrap());
        build_report("dcue", &anchors, &values).map_err(|e| e.to_string())
    })?;
    let fields = [
        report.exactness_plus,
        report.exactness_minus,
        report.robustness_ul,
        report.robustness_ft,
        report.robustness_mix,
    ];
    for f in fields {
        let v = f.ok_or("missing field")?;
        ensure((v - 1.0).abs() <= 0.01, || format!("{fields:?}"))?;
    }
    Ok(format!("{:.4?}, {took:?}", fields.map(Option::unwrap)))
}

fn criterion_alpha_sweep() -> Result<String, String> {
    let weights: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let (min_rho, min_orders) =
        (0..50u64).try_fold((f64::INFINITY, f64::INFINITY), |(rho_lo, ord_lo), seed| {
            let s = SimScenario {
                seed,
                ..SimScenario::default()
            };
            let pts = alpha_sweep(&s, &weights, 0).map_err(|e| e.to_string())?;
            let rho = sweep_rank_correlation(&pts).ok_or("constant sweep")?;
            let (lo, hi) = (pts[0].r_dcue, pts[10].r_dcue);
            let orders = if lo > 0.0 {
                (hi / lo).log10()
            } else {
                f64::INFINITY
            };
            Ok::<_, String>((rho_lo.min(rho), ord_lo.min(orders)))
        })?;
    ensure(min_rho > 0.9, || format!("minimum Spearman {min_rho}"))?;
    ensure(min_orders >= 10.0, || {
        format!("endpoint gap only {min_orders} orders")
    })?;
    Ok(format!(
        "min Spearman {min_rho:.4} over 50 seeds, min endpoint gap {min_orders:.1} orders"
    ))
}

fn criterion_rouge_auc() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..1000 {
        let cand: Vec<u8> = (0..rng.random_range(0..=12))
            .map(|_| rng.random_range(0..5))
            .collect();
        let reference: Vec<u8> = (0..rng.random_range(1..=12))
            .map(|_| rng.random_range(0..5))
            .collect();
        let l = lcs_table(&cand, &reference) as f64;
        let recall = l / reference.len() as f64;
        let precision = if cand.is_empty() {
            0.0
        } else {
            l / cand.len() as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let got_r = rouge_l(&cand, &reference, RougeMode::Recall).map_err(|e| e.to_string())?;
        let got_f = rouge_l(&cand, &reference, RougeMode::F1).map_err(|e| e.to_string())?;
        ensure(got_r == recall && got_f == f1, || {
            format!("rouge case {case}")
        })?;
    }
    for case in 0..1000 {
        let members: Vec<f64> = (0..rng.random_range(1..=30))
            .map(|_| f64::from(rng.random_range(0..10u8)))
            .collect();
        let others: Vec<f64> = (0..rng.random_range(1..=30))
            .map(|_| f64::from(rng.random_range(0..10u8)))
            .collect();
        let got = auc_roc(&members, &others).map_err(|e| e.to_string())?;
        let want = auc_pairs(&members, &others);
        ensure(got == want, || format!("auc case {case}: {got} vs {want}"))?;
    }
    Ok("1000/1000 Rouge-L and 1000/1000 AUC instances exact".into())
}

fn criterion_meta_harness() -> Result<String, String> {
    let v = exactness(0.1853, 0.0, [0.0, 1.0]).map_err(|e| e.to_string())?;
    ensure((v - 0.8147).abs() < 1e-12, || format!("exactness {v}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let lo = rng.random_range(-100.0..100.0);
        let scale = [lo, lo + rng.random_range(1e-6..200.0)];
        let a = rng.random_range(-1e4..1e4);
        let b = rng.random_range(-1e4..1e4);
        for out in [exactness(a, b, scale), robustness(a, b, scale)] {
            let out = out.map_err(|e| e.to_string())?;
            ensure((0.0..=1.0).contains(&out), || {
                format!("{out} for {a}, {b}, {scale:?}")
            })?;
        }
    }
    Ok(format!(
        "FB exactness {v:.4}, 20000 fuzzed outputs in [0, 1]"
    ))
}

fn criterion_losses() -> Result<String, String> {
    let ln2 = std::f64::consts::LN_2;
    let unit = LikelihoodBundle {
        nll_ref: Some(1.3),
        ..LikelihoodBundle::new(1.3, 1, 1.0)
    };
    let npo = npo_loss(&unit).map_err(|e| e.to_string())?;
    ensure((npo - 2.0 * ln2).abs() <= 1e-12, || format!("npo {npo}"))?;
    let dpo_b = LikelihoodBundle {
        nll_idk: Some(0.4),
        nll_idk_ref: Some(0.4),
        ..unit.clone()
    };
    let dpo = dpo_loss(&dpo_b).map_err(|e| e.to_string())?;
    ensure((dpo - ln2).abs() <= 1e-12, || format!("dpo {dpo}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..1000 {
        let b = LikelihoodBundle {
            nll_ref: Some(rng.random_range(0.0..30.0)),
            ..LikelihoodBundle::new(rng.random_range(0.0..30.0), 1, rng.random_range(0.01..10.0))
        };
        let (s, n) = (simnpo_loss(&b), npo_loss(&b));
        ensure(s.is_ok() && s.as_ref().ok() == n.as_ref().ok(), || {
            format!("bundle {i}: {s:?} vs {n:?}")
        })?;
    }
    Ok(format!(
        "npo {npo:.12}, dpo {dpo:.12}, simnpo == npo on 1000 bundles"
    ))
}

fn criterion_determinism() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_unlearn-gauge");
    let invocations: [&[&str]; 4] = [
        &["--seed", "42", "--format", "jsonl", "simulate"],
        &["--seed", "42", "simulate", "--u-mode", "interpolated:0.8"],
        &["--seed", "42", "simulate", "--sweep"],
        &["--seed", "42", "--format", "jsonl", "simulate", "--meta"],
    ];
    for args in invocations {
        let outputs: Vec<_> = ["1", "4"]
            .iter()
            .map(|threads| {
                Command::new(bin)
                    .env("UNLEARN_GAUGE_THREADS", threads)
                    .args(args)
                    .output()
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        ensure(outputs.iter().all(|o| o.status.success()), || {
            format!("{args:?} failed")
        })?;
        ensure(
            !outputs[0].stdout.is_empty() && outputs[0].stdout == outputs[1].stdout,
            || format!("{args:?} differs between runs"),
        )?;
    }
    Ok(format!(
        "{} invocations byte-identical across runs",
        invocations.len()
    ))
}

fn main() -> std::process::ExitCode {
    let mut gate = Gate {
        results: Vec::new(),
    };
    gate.check("ks_kernel", criterion_ks_kernel);
    gate.check("validation_agreement", criterion_agreement);
    gate.check("dcue_meta_row", criterion_dcue_meta_row);
    gate.check("forgetting_sweep", criterion_alpha_sweep);
    gate.check("rouge_auc_oracles", criterion_rouge_auc);
    gate.check("meta_harness", criterion_meta_harness);
    gate.check("loss_evaluators", criterion_losses);
    gate.check("cli_determinism", criterion_determinism);
    let failed: Vec<&str> = gate
        .results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    println!(
        "{}/{} criteria passed",
        gate.results.len() - failed.len(),
        gate.results.len()
    );
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
