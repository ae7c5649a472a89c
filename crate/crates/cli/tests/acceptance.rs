//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (bypassing the test harness capture) and the test fails if any
//! criterion fails.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use shotlearn::analysis::{bias_variance_from_table, budget_bound, optimal_shots, risk_bound_cor1, risk_bound_thm1};
use shotlearn::fourier::fit_series;
use shotlearn::learner::{clip01, Form};
use shotlearn::rng::stream;
use shotlearn::sampling::uniform_grid;
use shotlearn::stats::{bootstrap, bootstrap_mean, Interval, DEFAULT_RESAMPLES};
use shotlearn::{
    alphatron_train, eval_circuit, explicit_risk, extract_series, sample_mean_label, sample_rff_map, AlphatronConfig,
    BoundConstants, FeatureMap, LabeledDataset, LinkFunction, Predictor, ReuploadingParams, Weights,
};
use shotlearn_cli::config::{Command as Cmd, ConfigFile, ExperimentConfig, Overrides};
use shotlearn_cli::experiments::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn report(id: u32, name: &str, limit: Option<Duration>, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = check();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail.push_str(&format!("; over the {limit:?} budget"));
        }
    }
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} {verdict} {name}: {} [{:.2?}]\n", o.detail, took);
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    o.pass
}

fn config(cmd: Cmd, text: &str, out: &Path) -> ExperimentConfig {
    let over = Overrides { out_dir: Some(out.to_path_buf()), ..Overrides::default() };
    ExperimentConfig::resolve(cmd, ConfigFile::parse(text).unwrap(), &over).unwrap()
}

fn fourier_round_trip() -> Outcome {
    let xs = uniform_grid(500);
    let (mut worst_gap, mut worst_tail) = (0.0f64, 0.0f64);
    for seed in 0..10 {
        let p = ReuploadingParams::random(10, seed).unwrap();
        let s = extract_series(&p);
        for &x in &xs {
            worst_gap = worst_gap.max((s.eval(x) - eval_circuit(&p, x)).abs());
        }
        let wide = fit_series(|x| p.raw_probability(x), 35, 96).unwrap();
        for w in 11..=35 {
            let (a, b) = wide.coefficient(w);
            worst_tail = worst_tail.max(a.abs()).max(b.abs());
        }
    }
    outcome(worst_gap < 1e-9 && worst_tail < 1e-9, format!("max gap {worst_gap:.2e}, max |coef| above degree 10 {worst_tail:.2e}"))
}

fn sampler_laws() -> Outcome {
    let reps = 1_000_000usize;
    let p = 0.5;
    let mut pass = true;
    let mut detail = Vec::new();
    for ns in [1u32, 4, 16] {
        let mut rng = stream(11, &[ns as u64]);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..reps {
            let y = sample_mean_label(p, ns, &mut rng).unwrap();
            sum += y;
            sq += y * y;
        }
        let mean = sum / reps as f64;
        let var = (sq - reps as f64 * mean * mean) / (reps - 1) as f64;
        let law = p * (1.0 - p) / ns as f64;
        let z = (mean - p) / (law / reps as f64).sqrt();
        let rel = (var / law - 1.0).abs();
        pass &= z.abs() < 3.0 && rel < 0.05;
        detail.push(format!("Ns={ns}: z={z:+.2}, var rel err {rel:.4}"));
    }
    outcome(pass, detail.join("; "))
}

fn kernel_psd() -> Outcome {
    let mut rng = stream(5, &[]);
    let target = extract_series(&ReuploadingParams::random(10, 5).unwrap());
    let maps = [
        ("full", FeatureMap::full(10)),
        ("truncated", FeatureMap::truncated(4)),
        ("rff", sample_rff_map(&target, 30, &mut rng).unwrap()),
    ];
    let (mut diag, mut min_eig) = (0.0f64, f64::INFINITY);
    for (_, m) in &maps {
        for _ in 0..1000 {
            let x = rng.random_range(0.0..TAU);
            diag = diag.max((m.kernel(x, x) - 1.0).abs());
        }
        let xs: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..TAU)).collect();
        let gram = DMatrix::from_fn(100, 100, |i, j| m.kernel(xs[i], xs[j]));
        min_eig = min_eig.min(gram.symmetric_eigenvalues().min());
    }
    outcome(diag < 1e-12 && min_eig >= -1e-9, format!("max |k(x,x)-1| {diag:.2e}, min Gram eigenvalue {min_eig:.2e}"))
}

fn decomposition_identity(bv: &BiasVarianceOutcome) -> Outcome {
    let mut worst = 0.0f64;
    for t in &bv.tables {
        let r = bias_variance_from_table(&t.predictions, &bv.truth, t.ns).unwrap();
        worst = worst.max((r.mean_explicit_risk - r.bias_sq - r.variance).abs());
    }
    let mut rng = stream(9, &[]);
    for k in 2..12 {
        let table: Vec<Vec<f64>> = (0..k).map(|_| (0..50).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let truth: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
        let r = bias_variance_from_table(&table, &truth, 1).unwrap();
        worst = worst.max((r.mean_explicit_risk - r.bias_sq - r.variance).abs());
    }
    outcome(worst <= 1e-10, format!("{} trained and 10 random ensembles, max residual {worst:.2e}", bv.tables.len()))
}

fn learner_oracles() -> Outcome {
    let map1 = FeatureMap::truncated(1);
    let empty = LabeledDataset::new(vec![], vec![], 1, 0).unwrap();
    let mut rng = stream(21, &[]);
    let xs: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..TAU)).collect();
    let grid = uniform_grid(500);

    // all-zero labels: clip(0) = 0 already fits, so every update is zero
    let zeros = LabeledDataset::new(xs.clone(), vec![0.0; 30], 1, 0).unwrap();
    let h0 = alphatron_train(&zeros, &zeros, &FeatureMap::truncated(10), LinkFunction::Clip01, &AlphatronConfig::default())
        .unwrap();
    let fixed = matches!(&h0.weights, Weights::Primal(w) if w.iter().all(|&v| v == 0.0));

    let one = LabeledDataset::new(vec![0.7], vec![1.0], 1, 0).unwrap();
    let cfg1 = AlphatronConfig { iters: 1, form: Form::Dual, ..AlphatronConfig::default() };
    let h1 = alphatron_train(&one, &empty, &map1, LinkFunction::Clip01, &cfg1).unwrap();
    let trace = matches!(&h1.weights, Weights::Dual { alphas, .. } if alphas == &[1.0])
        && grid.iter().all(|&x| h1.predict(x) == clip01(map1.kernel(x, 0.7)));

    let target = ReuploadingParams::zeros(1).unwrap();
    let train_xs: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..TAU)).collect();
    let ys = train_xs.iter().map(|&x| eval_circuit(&target, x)).collect();
    let clean = LabeledDataset::new(train_xs, ys, 1, 0).unwrap();
    let h = alphatron_train(&clean, &clean, &map1, LinkFunction::Clip01, &AlphatronConfig::default()).unwrap();
    let recovery = explicit_risk(&h, &target, &grid);

    let noisy_target = ReuploadingParams::random(10, 3).unwrap();
    let nys = xs.iter().map(|&x| sample_mean_label(eval_circuit(&noisy_target, x), 1, &mut rng).unwrap()).collect();
    let noisy = LabeledDataset::new(xs.clone(), nys, 1, 0).unwrap();
    let val = LabeledDataset::new(xs[..10].to_vec(), noisy.ys[..10].to_vec(), 1, 0).unwrap();
    let map10 = FeatureMap::truncated(10);
    let run = |form| {
        alphatron_train(&noisy, &val, &map10, LinkFunction::Clip01, &AlphatronConfig { form, ..AlphatronConfig::default() })
            .unwrap()
    };
    let (p, d) = (run(Form::Primal), run(Form::Dual));
    let gap = grid.iter().map(|&x| (p.predict(x) - d.predict(x)).abs()).fold(0.0, f64::max);

    outcome(
        fixed && trace && recovery < 1e-3 && gap < 1e-10,
        format!("fixed point {fixed}, hand trace {trace}, noiseless risk {recovery:.2e}, primal/dual gap {gap:.2e}"),
    )
}

fn ci_text(i: &Interval) -> String {
    format!("{:.4} [{:.4}, {:.4}]", i.estimate, i.lo, i.hi)
}

fn asymmetry_trend(out: &Path) -> Outcome {
    let cfg = config(Cmd::SweepAsymmetry, "d = 10\nreplicas = 5", out);
    let rows = cmd_sweep_asymmetry(&cfg, 0).unwrap();
    let risks = |n1: usize, ns: u32| -> Vec<f64> {
        rows.iter().filter(|r| r.n1 == n1 && r.ns == ns).map(|r| r.explicit_risk).collect()
    };
    let big = bootstrap_mean(&risks(240, 1), cfg.seed);
    let small = bootstrap_mean(&risks(8, 1), cfg.seed);
    let m = |ns| bootstrap_mean(&risks(8, ns), cfg.seed).estimate;
    let early = m(1) - m(10);
    let late = m(100) - m(200);
    let saturated = early > 0.0 && late < 0.2 * early;
    outcome(
        big.below(&small) && saturated,
        format!(
            "risk(240,1) {} vs risk(8,1) {}; at N1=8 drop 100->200 {late:.4} vs 0.2 x drop 1->10 {:.4}",
            ci_text(&big),
            ci_text(&small),
            0.2 * early
        ),
    )
}

fn single_shot(out: &Path) -> Outcome {
    let cfg = config(Cmd::SingleShotScaling, "form = \"primal\"", out);
    let res = cmd_single_shot_scaling(&cfg, 0).unwrap();
    let at = |n1| res.rows.iter().find(|r| r.n1 == n1).unwrap().mean_risk;
    let ratio = at(24000) / at(40);
    outcome(ratio < 0.1, format!("mean risk {:.2e} at N1=24000 vs {:.2e} at N1=40, ratio {ratio:.3}", at(24000), at(40)))
}

/// Bootstrap intervals of bias² and variance over the replicas of one table.
fn ensemble_intervals(bv: &BiasVarianceOutcome, d: u32, ns: u32, link: LinkFunction, seed: u64) -> (Interval, Interval) {
    let t = bv.tables.iter().find(|t| t.d == d && t.ns == ns && t.link == link).unwrap();
    let stat = |pick: fn(&shotlearn::BiasVarianceReport) -> f64| {
        bootstrap(t.predictions.len(), DEFAULT_RESAMPLES, 0.95, seed, |idx| {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| t.predictions[i].clone()).collect();
            pick(&bias_variance_from_table(&rows, &bv.truth, ns).unwrap())
        })
    };
    (stat(|r| r.bias_sq), stat(|r| r.variance))
}

fn shot_bias_variance(bv: &BiasVarianceOutcome, seed: u64) -> Outcome {
    let (b1, v1) = ensemble_intervals(bv, 10, 1, LinkFunction::Clip01, seed);
    let (b100, v100) = ensemble_intervals(bv, 10, 100, LinkFunction::Clip01, seed);
    outcome(
        b100.below(&b1) && v100.below(&v1),
        format!(
            "bias² {} -> {}, variance {} -> {}",
            ci_text(&b1),
            ci_text(&b100),
            ci_text(&v1),
            ci_text(&v100)
        ),
    )
}

fn link_variance(bv: &BiasVarianceOutcome, seed: u64) -> Outcome {
    let (bc, vc) = ensemble_intervals(bv, 10, 1, LinkFunction::Clip01, seed);
    let (bi, vi) = ensemble_intervals(bv, 10, 1, LinkFunction::Identity, seed);
    let rel = (bc.estimate - bi.estimate).abs() / bc.estimate.max(bi.estimate);
    outcome(
        vc.below(&vi) && rel < 0.5,
        format!(
            "variance clip01 {} vs identity {}; bias² {:.4} vs {:.4} (relative gap {rel:.2})",
            ci_text(&vc),
            ci_text(&vi),
            bc.estimate,
            bi.estimate
        ),
    )
}

fn argmin_by<T: Copy>(items: impl Iterator<Item = (T, f64)>) -> T {
    items.fold(None, |best: Option<(T, f64)>, (k, v)| match best {
        Some((_, b)) if b <= v => best,
        _ => Some((k, v)),
    })
    .unwrap()
    .0
}

fn budget_tradeoff(out: &Path) -> Outcome {
    let cfg = config(Cmd::Tradeoff, "replicas = 10", out);
    let rows = cmd_tradeoff(&cfg, 0).unwrap();
    let best = |gamma: f64| {
        argmin_by(cfg.ns_grid.iter().map(|&ns| {
            let r: Vec<f64> = rows.iter().filter(|r| r.gamma == gamma && r.ns == ns).map(|r| r.explicit_risk).collect();
            (ns, r.iter().sum::<f64>() / r.len() as f64)
        }))
    };
    let (at0, at5) = (best(0.0), best(5.0));

    let bounds = cmd_bounds(&config(Cmd::Bounds, "", out)).unwrap();
    let mut marker_ok = true;
    let mut markers = Vec::new();
    for gamma in 0..=5 {
        let g = gamma as f64;
        let curve: Vec<_> = bounds.budget.iter().filter(|r| r.gamma == g).collect();
        let arg = argmin_by(curve.iter().map(|r| (r.ns, r.bound)));
        let star = curve[0].ns_star;
        marker_ok &= (arg as f64 - star).abs() <= 1.0;
        markers.push(format!("γ={gamma}: {arg} vs {star:.2}"));
    }
    outcome(
        at0 == 1 && at5 > 1 && marker_ok,
        format!("empirical argmin Ns {at0} at γ=0, {at5} at γ=5; bound argmin vs Ns* {}", markers.join(", ")),
    )
}

/// The fixed-budget bound written out independently of the library.
fn budget_curve(c1: f64, c2: f64, c3: f64, gamma: f64, ns: f64) -> f64 {
    let ntot = 600.0;
    (c1 + c3) * ((ns + gamma) / ntot).sqrt() + c2 * ((ns + gamma) / (ntot * ns)).sqrt()
}

fn bound_calculators() -> Outcome {
    let base = BoundConstants::default().with_asymmetry_constants();
    let mut reduce_gap = 0.0f64;
    for (n1, ns) in [(8, 1), (40, 10), (240, 200), (24000, 1)] {
        let thm = risk_bound_thm1(&base, n1, ns).total;
        let cor = risk_bound_cor1(&base, n1, ns);
        reduce_gap = reduce_gap.max((thm - cor).abs() / cor);
    }
    let flat = BoundConstants { gamma: 0.0, ..base };
    let at_one = (1..=25).all(|ns| budget_bound(&flat, 600, ns) >= budget_bound(&flat, 600, 1));

    let mut rng = stream(50, &[]);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (c1, c2, c3) = (rng.random_range(0.2..3.0), rng.random_range(0.1..3.0), rng.random_range(0.0..3.0));
        let gamma = rng.random_range(0.0..10.0);
        let c = BoundConstants { c1, c2, c3, gamma, ..BoundConstants::default() };
        let star = optimal_shots(&c).unwrap();
        let fine = argmin_by((1..=40_000).map(|k| {
            let ns = k as f64 * 1e-3;
            (ns, budget_curve(c1, c2, c3, gamma, ns))
        }));
        worst = worst.max((fine - star).abs());
    }
    outcome(
        reduce_gap < 1e-12 && at_one && worst <= 1e-3,
        format!("thm/cor relative gap {reduce_gap:.1e}, γ=0 minimum at Ns=1 {at_one}, worst |grid argmin - Ns*| {worst:.1e} (step 1e-3)"),
    )
}

fn run_cli(out: &Path, jobs: &str, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_shotlearn"))
        .args(["--seed", "11", "--jobs", jobs, "--out"])
        .arg(out)
        .args(args)
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} failed");
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(root: &Path) -> Outcome {
    let commands = ["target", "learn", "sweep-asymmetry", "single-shot-scaling", "bias-variance", "tradeoff", "bounds"];
    let (a, b) = (root.join("run_a"), root.join("run_b"));
    for cmd in commands {
        run_cli(&a, "1", &[cmd]);
        run_cli(&b, "4", &[cmd]);
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let identical = fa == fb;
    outcome(
        identical && fa.len() >= 12,
        format!("{} files from {} commands, serial and 4-thread reruns byte-identical: {identical}", fa.len(), commands.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let sub = |name: &str| dir.path().join(name);
    let secs = Duration::from_secs;

    let bv_cfg = config(Cmd::BiasVariance, "d_grid = [1, 5, 10]\nreplicas = 20\nn1_grid = [40]", &sub("bv"));
    let bv_start = Instant::now();
    let bv = cmd_bias_variance(&bv_cfg, 0).unwrap();
    let bv_time = bv_start.elapsed();

    let results = [
        report(1, "Fourier round trip", Some(secs(1)), fourier_round_trip),
        report(2, "sampler laws", Some(secs(10)), sampler_laws),
        report(3, "kernel normalization and PSD", None, kernel_psd),
        report(4, "bias-variance identity", None, || decomposition_identity(&bv)),
        report(5, "learner oracles", Some(secs(5)), learner_oracles),
        report(6, "asymmetry trend", Some(secs(120)), || asymmetry_trend(&sub("sweep"))),
        report(7, "single-shot learnability", Some(secs(300)), || single_shot(&sub("single"))),
        report(8, "shot-dependent bias and variance", Some(secs(180).saturating_sub(bv_time)), || shot_bias_variance(&bv, bv_cfg.seed)),
        report(9, "link-function variance suppression", Some(secs(180).saturating_sub(bv_time)), || link_variance(&bv, bv_cfg.seed)),
        report(10, "budget trade-off", Some(secs(300)), || budget_tradeoff(&sub("tradeoff"))),
        report(11, "bound calculators", None, bound_calculators),
        report(12, "determinism", None, || determinism(dir.path())),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
