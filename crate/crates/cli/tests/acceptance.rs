//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Lines go straight to stderr so they show without `--nocapture`.
//! Criteria 5-7 depend on training outcomes (desk IoU, edge weight α,
//! graph depth n); their verdict is reported but does not fail the test.
//! The rest are exact properties and must pass.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use lscm_core::gradcheck::gradient_suite;
use lscm_core::synth::evaluate;

/// Ablation budget: iterations per run on the relation split.
const ABLATION_ITERS: u64 = 1500;
const ABLATION_SEEDS: [u64; 3] = [7, 8, 9];
/// Criterion 6 counts a gap of 0.5 IoU points or less as a failed echo.
const ECHO_MARGIN: f64 = 0.005;

const SMALL: &str = "\
c_v = 4
c_l = 4
c_h = 4
c_o = 4
c_s = 4
c_e = 4
mutan_rank = 2
checkpoint_every = 0
";

struct Verdict {
    id: u8,
    pass: bool,
    enforced: bool,
    detail: String,
}

fn line(v: &Verdict) -> String {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    let note = if v.enforced { "" } else { " (reported)" };
    format!("criterion {}: {tag}{note}  {}", v.id, v.detail)
}

fn report(v: &Verdict) {
    let _ = writeln!(std::io::stderr().lock(), "{}", line(v));
}

fn lscm(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_lscm"))
        .args(args)
        .env_remove("LSCM_SEED")
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "lscm {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metric(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(',')))
        .unwrap_or_else(|| panic!("no {key} in report:\n{report}"))
        .parse()
        .unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let worst = support::oracle::oracle_max_error();
    let t = start.elapsed();
    Verdict {
        id: 1,
        pass: worst <= support::oracle::TOL && t < Duration::from_secs(10),
        enforced: true,
        detail: format!(
            "loop oracle vs lscm_forward, 20 instances: max |diff| {worst:.2e} (tol 1e-10), {}",
            secs(t)
        ),
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let results = gradient_suite(7, 10, 2).unwrap();
    let t = start.elapsed();
    let worst = results.iter().map(|r| r.max_err).fold(0.0, f64::max);
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    Verdict {
        id: 2,
        pass: failed.is_empty() && t < Duration::from_secs(120),
        enforced: true,
        detail: format!(
            "{} gradient cases incl. full_model: max rel err {worst:.2e} (tol 1e-4), failed {failed:?}, {}",
            results.len(),
            secs(t)
        ),
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let r = support::mask_algebra(100);
    let t = start.elapsed();
    Verdict {
        id: 3,
        pass: r.is_ok() && t < Duration::from_secs(5),
        enforced: true,
        detail: format!(
            "100 trees: S symmetric, 2(T-1) ones, alpha extremes: {}, {}",
            r.err().unwrap_or("ok".into()),
            secs(t)
        ),
    }
}

fn criterion_4() -> Verdict {
    let worst = support::worst_row_sum_error(1000);
    Verdict {
        id: 4,
        pass: worst <= 1e-9,
        enforced: true,
        detail: format!("rows of B and A over 1000 inputs: max |sum-1| {worst:.2e} (tol 1e-9)"),
    }
}

fn train_eval(data: &Path, run: &Path, extra: &[&str]) -> (f64, Duration, String) {
    let start = Instant::now();
    let mut args = vec!["train", "--data", s(data), "--out", s(run)];
    args.extend(extra);
    lscm(&args);
    let ckpt = run.join("last.bin");
    let mut args = vec!["eval", "--data", s(data), "--checkpoint", s(&ckpt)];
    args.extend(extra);
    let rep = lscm(&args);
    (metric(&rep, "overall_iou"), start.elapsed(), rep)
}

fn criterion_5(root: &Path) -> Verdict {
    let data = root.join("desk");
    lscm(&["gen-data", "--out", s(&data)]);
    let (iou, t, rep) = train_eval(&data, &root.join("desk_run"), &[]);
    let pr: Vec<String> = [0.5, 0.7, 0.9]
        .iter()
        .map(|x| format!("pr@{x}={:.3}", metric(&rep, &format!("pr@{x:.1}"))))
        .collect();
    Verdict {
        id: 5,
        pass: iou >= 0.70 && t < Duration::from_secs(30 * 60),
        enforced: false,
        detail: format!(
            "desk config, 2000 train / 200 val: overall IoU {iou:.4} (>= 0.70), {}, train+eval {}",
            pr.join(" "),
            secs(t)
        ),
    }
}

/// Mean held-out overall IoU over [`ABLATION_SEEDS`] on the relation split.
fn ablation(data: &Path, root: &Path, tag: &str, flags: &[&str]) -> (f64, Vec<f64>) {
    let iters = ABLATION_ITERS.to_string();
    let ious: Vec<f64> = ABLATION_SEEDS
        .iter()
        .map(|seed| {
            let seed = seed.to_string();
            let mut extra = vec!["--iters", &iters, "--seed", &seed];
            extra.extend(flags);
            let run = root.join(format!("{tag}_{seed}"));
            let (iou, t, _) = train_eval(data, &run, &extra);
            let _ = writeln!(
                std::io::stderr().lock(),
                "  ablation {tag} seed {seed}: overall IoU {iou:.4} ({})",
                secs(t)
            );
            iou
        })
        .collect();
    (ious.iter().sum::<f64>() / ious.len() as f64, ious)
}

fn relation_data(root: &Path) -> PathBuf {
    let data = root.join("relation");
    lscm(&["gen-data", "--out", s(&data), "--mix", "relation"]);
    data
}

fn fmt_runs(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join("/")
}

fn criteria_6_7(root: &Path) -> (Verdict, Verdict) {
    let data = relation_data(root);
    let (base, base_runs) = ablation(
        &data,
        root,
        "alpha0.1_n1",
        &["--alpha", "0.1", "--n-layers", "1"],
    );
    let (full, full_runs) = ablation(
        &data,
        root,
        "alpha1_n1",
        &["--alpha", "1", "--n-layers", "1"],
    );
    let (n0, n0_runs) = ablation(
        &data,
        root,
        "alpha0.1_n0",
        &["--alpha", "0.1", "--n-layers", "0"],
    );
    let (n4, n4_runs) = ablation(
        &data,
        root,
        "alpha0.1_n4",
        &["--alpha", "0.1", "--n-layers", "4"],
    );
    let six = Verdict {
        id: 6,
        pass: base - full > ECHO_MARGIN,
        enforced: false,
        detail: format!(
            "relation split, {ABLATION_ITERS} iters x 3 seeds: alpha=0.1 {base:.4} [{}] vs alpha=1 {full:.4} [{}], gap {:+.2} points (needs > +0.5)",
            fmt_runs(&base_runs),
            fmt_runs(&full_runs),
            100.0 * (base - full)
        ),
    };
    let seven = Verdict {
        id: 7,
        pass: base >= n0 && base >= n4,
        enforced: false,
        detail: format!(
            "relation split, {ABLATION_ITERS} iters x 3 seeds: n=1 {base:.4} vs n=0 {n0:.4} [{}] vs n=4 {n4:.4} [{}]",
            fmt_runs(&n0_runs),
            fmt_runs(&n4_runs)
        ),
    };
    (six, seven)
}

fn criterion_8() -> Verdict {
    let (preds, gts) = support::random_mask_pairs(8, 100);
    let mut worst = support::metric_error(&preds, &gts);
    for (p, g) in preds.iter().zip(&gts) {
        worst = worst.max(support::metric_error(
            std::slice::from_ref(p),
            std::slice::from_ref(g),
        ));
    }
    let (p, g) = support::distinguishing_pairs();
    let r = evaluate(&p, &g).unwrap();
    let distinct = (r.overall_iou - 0.9).abs() <= 1e-12 && (r.mean_iou() - 0.5).abs() <= 1e-12;
    Verdict {
        id: 8,
        pass: worst <= 1e-12 && distinct,
        enforced: true,
        detail: format!(
            "100 mask pairs vs pixel loop: max |diff| {worst:.2e}; (0,1),(9,9) -> overall {} mean {}",
            r.overall_iou,
            r.mean_iou()
        ),
    }
}

fn criterion_9(root: &Path) -> Verdict {
    let cfg = root.join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let data = root.join("tiny");
    lscm(&["gen-data", "--out", s(&data), "--train", "6", "--val", "2"]);
    let common = ["--config", s(&cfg), "--data", s(&data), "--iters", "10"];
    let train = |out: &Path, more: &[&str]| {
        let mut args = vec!["train", "--out", s(out)];
        args.extend(common);
        args.extend(more);
        lscm(&args)
    };
    let (a, b, c) = (root.join("det_a"), root.join("det_b"), root.join("det_c"));
    let log_a = train(&a, &[]);
    let log_b = train(&b, &[]);
    let ckpt = |d: &Path| std::fs::read(d.join("last.bin")).unwrap();
    let identical = log_a == log_b && ckpt(&a) == ckpt(&b);

    let first = train(&c, &["--stop-at", "4"]);
    let last = c.join("last.bin");
    let second = train(&c, &["--resume", s(&last)]);
    let joined: Vec<&str> = first.lines().chain(second.lines().skip(1)).collect();
    let resumed = joined == log_a.lines().collect::<Vec<_>>() && ckpt(&c) == ckpt(&a);
    Verdict {
        id: 9,
        pass: identical && resumed,
        enforced: true,
        detail: format!("same seed -> identical log and checkpoint: {identical}; resume at 4 of 10 -> identical: {resumed}"),
    }
}

#[test]
fn acceptance() {
    let root = tempfile::tempdir().unwrap();
    let mut verdicts = Vec::new();
    let mut run = |v: Verdict| {
        report(&v);
        verdicts.push(v);
    };
    run(criterion_1());
    run(criterion_2());
    run(criterion_3());
    run(criterion_4());
    run(criterion_8());
    run(criterion_9(root.path()));
    run(criterion_5(root.path()));
    let (six, seven) = criteria_6_7(root.path());
    run(six);
    run(seven);

    verdicts.sort_by_key(|v| v.id);
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "\nacceptance summary");
    for v in &verdicts {
        let _ = writeln!(err, "{}", line(v));
    }
    drop(err);
    let failed: Vec<u8> = verdicts
        .iter()
        .filter(|v| v.enforced && !v.pass)
        .map(|v| v.id)
        .collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
