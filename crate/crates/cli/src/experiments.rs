//! One function per command. Each writes its CSV files into the configured
//! output directory and returns the same results in memory.
//!
//! Randomness follows a common-random-numbers layout. Inputs and shot
//! outcomes depend only on the experiment and the replica: a smaller dataset
//! is a prefix of a larger one, and a label averaged over more shots extends
//! the shots of one averaged over fewer. Cells that differ only in `N₁`,
//! `N_s`, `γ`, the hypothesis degree or the learner therefore see nested or
//! identical data, which sharpens comparisons between them.

use serde::Serialize;
use shotlearn::analysis::{allocate_budget, bias_variance_from_table, budget_bound, optimal_shots, risk_bound_cor1};
use shotlearn::learner::DEFAULT_PRIMAL_THRESHOLD;
use shotlearn::rng::stream;
use shotlearn::sampling::{draw_inputs, label_inputs, sample_mean_label, uniform_grid};
use shotlearn::stats::{mean, std_dev};
use shotlearn::{
    alphatron_train, erm_select, estimate_risks, eval_circuit, extract_series, persist, AlphatronConfig,
    BiasVarianceReport, FeatureMap, FourierSeries, LabeledDataset, LinkFunction, ReuploadingParams,
    RiskReport, TrainedHypothesis,
};

use crate::config::ExperimentConfig;
use crate::output::{write_rows, RowWriter};
use crate::runner::run_ordered;
use crate::CliError;

/// Stream labels. The first path element names the experiment, the last
/// names the role of the draw.
pub mod label {
    pub const LEARN: u64 = 1;
    pub const SWEEP: u64 = 2;
    pub const SINGLE_SHOT: u64 = 3;
    pub const BIAS_VARIANCE: u64 = 4;
    pub const TRADEOFF: u64 = 5;

    pub const TRAIN_X: u64 = 101;
    pub const VAL_X: u64 = 102;
    pub const TRAIN_Y: u64 = 103;
    pub const VAL_Y: u64 = 104;
    pub const TEST_Y: u64 = 105;
}

/// The target and the fixed test grid shared by every cell of a run.
pub struct Context {
    pub target: ReuploadingParams,
    /// How the target was obtained; recorded in dataset files.
    pub target_name: String,
    pub test_xs: Vec<f64>,
    pub truth: Vec<f64>,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let (target, target_name) = match &cfg.target_file {
            Some(path) => (
                persist::load_target(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
                path.display().to_string(),
            ),
            None => (
                ReuploadingParams::random(cfg.layers, cfg.target_seed)?,
                format!("generated layers={} seed={}", cfg.layers, cfg.target_seed),
            ),
        };
        let test_xs = uniform_grid(cfg.test_points);
        let truth = test_xs.iter().map(|&x| eval_circuit(&target, x)).collect();
        Ok(Self { target, target_name, test_xs, truth })
    }

    pub fn predictions(&self, h: &TrainedHypothesis) -> Vec<f64> {
        h.predict_many(&self.test_xs)
    }

    /// Mean squared error of `predictions` against the target on the test grid.
    pub fn explicit_risk(&self, predictions: &[f64]) -> f64 {
        predictions.iter().zip(&self.truth).map(|(p, f)| (p - f).powi(2)).sum::<f64>() / self.truth.len() as f64
    }
}

/// Where a cell's data comes from. Inputs and shots are keyed by
/// `(experiment, replica)`; point `i` draws its shots from its own stream,
/// so a larger shot count extends the shots of a smaller one.
struct DataKey {
    experiment: u64,
    replica: usize,
}

fn dataset(
    cfg: &ExperimentConfig,
    ctx: &Context,
    key: &DataKey,
    n: usize,
    shots: u32,
    roles: (u64, u64),
) -> Result<LabeledDataset, CliError> {
    let (exp, rep) = (key.experiment, key.replica as u64);
    let xs = draw_inputs(n, &mut stream(cfg.seed, &[exp, rep, roles.0]));
    let ys = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| sample_mean_label(eval_circuit(&ctx.target, x), shots, &mut stream(cfg.seed, &[exp, rep, roles.1, i as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabeledDataset::new(xs, ys, shots, cfg.seed)?)
}

fn split(
    cfg: &ExperimentConfig,
    ctx: &Context,
    key: &DataKey,
    n1: usize,
    n2: usize,
    shots: u32,
) -> Result<(LabeledDataset, LabeledDataset), CliError> {
    Ok((
        dataset(cfg, ctx, key, n1, shots, (label::TRAIN_X, label::TRAIN_Y))?,
        dataset(cfg, ctx, key, n2, shots, (label::VAL_X, label::VAL_Y))?,
    ))
}

/// Clipped hypotheses are trained with the iterative learner; identity-link
/// hypotheses with ridge regression, the strength chosen on validation data.
pub fn fit(
    cfg: &ExperimentConfig,
    map: &FeatureMap,
    link: LinkFunction,
    train: &LabeledDataset,
    val: &LabeledDataset,
) -> Result<TrainedHypothesis, CliError> {
    let h = match link {
        LinkFunction::Clip01 => {
            let config = AlphatronConfig {
                rate: cfg.rate,
                iters: cfg.iters,
                form: cfg.form,
                primal_threshold: DEFAULT_PRIMAL_THRESHOLD,
            };
            alphatron_train(train, val, map, link, &config)?
        }
        LinkFunction::Identity => erm_select(train, val, map, &cfg.c_grid)?,
    };
    Ok(h)
}

pub struct TargetOutcome {
    pub params: ReuploadingParams,
    pub series: FourierSeries,
}

/// Generates a random target with `layers` layers from `target_seed` and
/// writes `target.txt` and `target_series.csv`.
pub fn cmd_target(cfg: &ExperimentConfig) -> Result<TargetOutcome, CliError> {
    let params = ReuploadingParams::random(cfg.layers, cfg.target_seed)?;
    let series = extract_series(&params);
    std::fs::create_dir_all(&cfg.out_dir)?;
    persist::save_target(&params, &cfg.out_dir.join("target.txt"))?;
    persist::save_series(&series, &cfg.out_dir.join("target_series.csv"))?;
    Ok(TargetOutcome { params, series })
}

pub const LEARN_HEADER: [&str; 10] =
    ["n1", "n2", "ns", "d", "link", "selected_iter", "explicit_risk", "empirical_risk", "noise_floor", "implicit_risk"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearnRow {
    pub n1: usize,
    pub n2: usize,
    pub ns: u32,
    pub d: u32,
    pub link: String,
    pub selected_iter: usize,
    pub explicit_risk: f64,
    pub empirical_risk: f64,
    pub noise_floor: f64,
    pub implicit_risk: f64,
}

pub struct LearnOutcome {
    pub hypothesis: TrainedHypothesis,
    pub risks: RiskReport,
    pub row: LearnRow,
}

/// Trains one model at the first entries of the `N₁`, `N₂` and `N_s`
/// grids. Writes the datasets, the model and a one-row `learn.csv`.
pub fn cmd_learn(cfg: &ExperimentConfig) -> Result<LearnOutcome, CliError> {
    let ctx = Context::new(cfg)?;
    let (n1, n2, ns) = (cfg.n1_grid[0], cfg.n2_grid[0], cfg.ns_grid[0]);
    let key = DataKey { experiment: label::LEARN, replica: 0 };
    let (train, val) = split(cfg, &ctx, &key, n1, n2, ns)?;
    let map = FeatureMap::truncated(cfg.d);
    let h = fit(cfg, &map, cfg.link, &train, &val)?;

    let test_ys = label_inputs(&ctx.target, &ctx.test_xs, ns, &mut stream(cfg.seed, &[label::LEARN, label::TEST_Y]))?;
    let noisy = LabeledDataset::new(ctx.test_xs.clone(), test_ys, ns, cfg.seed)?;
    let risks = estimate_risks(&h, &ctx.target, &ctx.test_xs, Some(&noisy))?;

    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    persist::save_dataset(&train, &ctx.target_name, &out.join("train.csv"))?;
    persist::save_dataset(&val, &ctx.target_name, &out.join("validation.csv"))?;
    persist::save_model(&h, &out.join("model.csv"))?;
    let row = LearnRow {
        n1,
        n2,
        ns,
        d: cfg.d,
        link: cfg.link.to_string(),
        selected_iter: h.selected_iteration,
        explicit_risk: risks.explicit,
        empirical_risk: risks.empirical.unwrap_or(f64::NAN),
        noise_floor: risks.noise_floor.unwrap_or(f64::NAN),
        implicit_risk: risks.implicit.unwrap_or(f64::NAN),
    };
    write_rows(out, "learn.csv", &LEARN_HEADER, std::slice::from_ref(&row))?;
    Ok(LearnOutcome { hypothesis: h, risks, row })
}

pub const SWEEP_HEADER: [&str; 5] = ["n1", "ns", "replica", "explicit_risk", "selected_iter"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n1: usize,
    pub ns: u32,
    pub replica: usize,
    pub explicit_risk: f64,
    pub selected_iter: usize,
}

/// Every `(N₁, N_s)` pair times every replica, in that nesting order.
/// Writes `sweep_asymmetry.csv`.
pub fn cmd_sweep_asymmetry(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<SweepRow>, CliError> {
    let ctx = Context::new(cfg)?;
    let map = FeatureMap::truncated(cfg.d);
    let mut cells = Vec::new();
    for (&n1, &n2) in cfg.n1_grid.iter().zip(&cfg.n2_grid) {
        for &ns in &cfg.ns_grid {
            cells.extend((0..cfg.replicas).map(|r| (n1, n2, ns, r)));
        }
    }
    let mut out = RowWriter::create(&cfg.out_dir, "sweep_asymmetry.csv", &SWEEP_HEADER)?;
    let mut rows = Vec::with_capacity(cells.len());
    run_ordered(
        &cells,
        jobs,
        |&(n1, n2, ns, replica)| {
            let key = DataKey { experiment: label::SWEEP, replica };
            let (train, val) = split(cfg, &ctx, &key, n1, n2, ns)?;
            let h = fit(cfg, &map, cfg.link, &train, &val)?;
            Ok(SweepRow {
                n1,
                ns,
                replica,
                explicit_risk: ctx.explicit_risk(&ctx.predictions(&h)),
                selected_iter: h.selected_iteration,
            })
        },
        |row| {
            out.row(&row)?;
            rows.push(row);
            Ok(())
        },
    )?;
    Ok(rows)
}

pub const SCALING_HEADER: [&str; 3] = ["n1", "mean_risk", "std_risk"];
pub const MEAN_PREDICTOR_HEADER: [&str; 4] = ["n1", "x", "target", "mean_prediction"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n1: usize,
    pub mean_risk: f64,
    pub std_risk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct MeanPredictorRow {
    n1: usize,
    x: f64,
    target: f64,
    mean_prediction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingOutcome {
    pub rows: Vec<ScalingRow>,
    /// Per-replica explicit risks, one vector per `N₁`.
    pub risks: Vec<Vec<f64>>,
    /// Replica-averaged predictions on the test grid, one vector per `N₁`.
    pub mean_predictions: Vec<Vec<f64>>,
}

/// Risk versus `N₁` at the first shot count of the grid (one shot by
/// default). Writes `single_shot_scaling.csv` and the replica-averaged
/// predictor curves to `single_shot_mean_predictor.csv`.
pub fn cmd_single_shot_scaling(cfg: &ExperimentConfig, jobs: usize) -> Result<ScalingOutcome, CliError> {
    let ctx = Context::new(cfg)?;
    let map = FeatureMap::truncated(cfg.d);
    let ns = cfg.ns_grid[0];
    let cells: Vec<(usize, usize, usize)> = cfg
        .n1_grid
        .iter()
        .zip(&cfg.n2_grid)
        .flat_map(|(&n1, &n2)| (0..cfg.replicas).map(move |r| (n1, n2, r)))
        .collect();
    let mut summary = RowWriter::create(&cfg.out_dir, "single_shot_scaling.csv", &SCALING_HEADER)?;
    let mut curves = RowWriter::create(&cfg.out_dir, "single_shot_mean_predictor.csv", &MEAN_PREDICTOR_HEADER)?;
    let mut outcome = ScalingOutcome { rows: Vec::new(), risks: Vec::new(), mean_predictions: Vec::new() };
    let mut group: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut next = 0;
    run_ordered(
        &cells,
        jobs,
        |&(n1, n2, replica)| {
            let key = DataKey { experiment: label::SINGLE_SHOT, replica };
            let (train, val) = split(cfg, &ctx, &key, n1, n2, ns)?;
            let preds = ctx.predictions(&fit(cfg, &map, cfg.link, &train, &val)?);
            Ok((ctx.explicit_risk(&preds), preds))
        },
        |result| {
            let n1 = cells[next].0;
            next += 1;
            group.push(result);
            if group.len() < cfg.replicas {
                return Ok(());
            }
            let risks: Vec<f64> = group.iter().map(|(r, _)| *r).collect();
            let mut avg = vec![0.0; ctx.test_xs.len()];
            for (_, p) in &group {
                avg.iter_mut().zip(p).for_each(|(a, v)| *a += v);
            }
            avg.iter_mut().for_each(|a| *a /= cfg.replicas as f64);
            let row = ScalingRow { n1, mean_risk: mean(&risks), std_risk: std_dev(&risks) };
            summary.row(&row)?;
            for ((&x, &target), &mean_prediction) in ctx.test_xs.iter().zip(&ctx.truth).zip(&avg) {
                curves.row(&MeanPredictorRow { n1, x, target, mean_prediction })?;
            }
            outcome.rows.push(row);
            outcome.risks.push(risks);
            outcome.mean_predictions.push(avg);
            group.clear();
            Ok(())
        },
    )?;
    Ok(outcome)
}

pub const BIAS_VARIANCE_HEADER: [&str; 6] = ["d", "ns", "bias_sq", "variance", "link_kind", "mean_explicit_risk"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasVarianceRow {
    pub d: u32,
    pub ns: u32,
    pub bias_sq: f64,
    pub variance: f64,
    pub link_kind: String,
    pub mean_explicit_risk: f64,
}

/// The replica predictions behind one bias-variance row.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTable {
    pub d: u32,
    pub ns: u32,
    pub link: LinkFunction,
    /// `[replica][test point]`.
    pub predictions: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasVarianceOutcome {
    pub rows: Vec<BiasVarianceRow>,
    pub tables: Vec<EnsembleTable>,
    /// Target values on the test grid.
    pub truth: Vec<f64>,
}

pub const LINKS: [LinkFunction; 2] = [LinkFunction::Clip01, LinkFunction::Identity];

/// For every degree, shot count and link: trains `replicas` models on
/// independent datasets of the first `N₁`/`N₂` sizes and decomposes their
/// test error. Both links see identical data. Writes `bias_variance.csv`.
pub fn cmd_bias_variance(cfg: &ExperimentConfig, jobs: usize) -> Result<BiasVarianceOutcome, CliError> {
    let ctx = Context::new(cfg)?;
    let (n1, n2) = (cfg.n1_grid[0], cfg.n2_grid[0]);
    let mut cells = Vec::new();
    for &d in &cfg.d_grid {
        for &ns in &cfg.ns_grid {
            for link in LINKS {
                cells.extend((0..cfg.replicas).map(|r| (d, ns, link, r)));
            }
        }
    }
    let mut out = RowWriter::create(&cfg.out_dir, "bias_variance.csv", &BIAS_VARIANCE_HEADER)?;
    let mut outcome = BiasVarianceOutcome { rows: Vec::new(), tables: Vec::new(), truth: ctx.truth.clone() };
    let mut group = Vec::new();
    let mut next = 0;
    run_ordered(
        &cells,
        jobs,
        |&(d, ns, link, replica)| {
            let key = DataKey { experiment: label::BIAS_VARIANCE, replica };
            let (train, val) = split(cfg, &ctx, &key, n1, n2, ns)?;
            Ok(ctx.predictions(&fit(cfg, &FeatureMap::truncated(d), link, &train, &val)?))
        },
        |preds| {
            let (d, ns, link, _) = cells[next];
            next += 1;
            group.push(preds);
            if group.len() < cfg.replicas {
                return Ok(());
            }
            let predictions = std::mem::take(&mut group);
            let BiasVarianceReport { bias_sq, variance, mean_explicit_risk, .. } =
                bias_variance_from_table(&predictions, &ctx.truth, ns)?;
            let row = BiasVarianceRow { d, ns, bias_sq, variance, link_kind: link.to_string(), mean_explicit_risk };
            out.row(&row)?;
            outcome.rows.push(row);
            outcome.tables.push(EnsembleTable { d, ns, link, predictions });
            Ok(())
        },
    )?;
    Ok(outcome)
}

pub const TRADEOFF_HEADER: [&str; 6] = ["gamma", "ns", "n1", "n2", "replica", "explicit_risk"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub gamma: f64,
    pub ns: u32,
    pub n1: usize,
    pub n2: usize,
    pub replica: usize,
    pub explicit_risk: f64,
}

/// For every `(γ, N_s)`: splits the shot budget `ntot` into training and
/// validation inputs, trains and scores. Infeasible allocations are skipped
/// with a warning. Writes `tradeoff.csv`.
pub fn cmd_tradeoff(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<TradeoffRow>, CliError> {
    let ctx = Context::new(cfg)?;
    let map = FeatureMap::truncated(cfg.d);
    let mut cells = Vec::new();
    for &gamma in &cfg.gamma_grid {
        for &ns in &cfg.ns_grid {
            match allocate_budget(cfg.ntot, ns as u64, gamma, cfg.train_fraction) {
                Ok((n1, n2)) => cells.extend((0..cfg.replicas).map(|r| (gamma, ns, n1, n2, r))),
                Err(e) => log::warn!("skipping gamma={gamma} ns={ns}: {e}"),
            }
        }
    }
    let mut out = RowWriter::create(&cfg.out_dir, "tradeoff.csv", &TRADEOFF_HEADER)?;
    let mut rows = Vec::with_capacity(cells.len());
    run_ordered(
        &cells,
        jobs,
        |&(gamma, ns, n1, n2, replica)| {
            let key = DataKey { experiment: label::TRADEOFF, replica };
            let (train, val) = split(cfg, &ctx, &key, n1, n2, ns)?;
            let h = fit(cfg, &map, cfg.link, &train, &val)?;
            Ok(TradeoffRow { gamma, ns, n1, n2, replica, explicit_risk: ctx.explicit_risk(&ctx.predictions(&h)) })
        },
        |row| {
            out.row(&row)?;
            rows.push(row);
            Ok(())
        },
    )?;
    Ok(rows)
}

pub const BOUND_ASYMMETRY_HEADER: [&str; 3] = ["n1", "ns", "bound"];
pub const BOUND_BUDGET_HEADER: [&str; 5] = ["gamma", "ns", "n1", "bound", "ns_star"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymmetryBoundRow {
    pub n1: usize,
    pub ns: u32,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetBoundRow {
    pub gamma: f64,
    pub ns: u32,
    /// Training inputs the budget buys, `ntot / (ns + γ)`.
    pub n1: f64,
    pub bound: f64,
    /// Closed-form minimizer over real `N_s`, repeated on every row of a curve.
    pub ns_star: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsOutcome {
    pub asymmetry: Vec<AsymmetryBoundRow>,
    pub budget: Vec<BudgetBoundRow>,
}

/// Writes `bounds_asymmetry.csv` (the bound over the `(N₁, N_s)` grid) and
/// `bounds_budget.csv` (the fixed-budget bound over `(γ, N_s)`).
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<BoundsOutcome, CliError> {
    let c = cfg.bounds;
    let mut asymmetry = Vec::new();
    for &n1 in &cfg.n1_grid {
        for &ns in &cfg.ns_grid {
            asymmetry.push(AsymmetryBoundRow { n1, ns, bound: risk_bound_cor1(&c, n1 as u64, ns as u64) });
        }
    }
    let mut budget = Vec::new();
    for &gamma in &cfg.gamma_grid {
        let cg = shotlearn::BoundConstants { gamma, ..c };
        let ns_star = optimal_shots(&cg)?;
        for &ns in cfg.ns_grid.iter().filter(|&&ns| ns as f64 + gamma <= cfg.ntot as f64) {
            budget.push(BudgetBoundRow {
                gamma,
                ns,
                n1: cfg.ntot as f64 / (ns as f64 + gamma),
                bound: budget_bound(&cg, cfg.ntot, ns as u64),
                ns_star,
            });
        }
    }
    write_rows(&cfg.out_dir, "bounds_asymmetry.csv", &BOUND_ASYMMETRY_HEADER, &asymmetry)?;
    write_rows(&cfg.out_dir, "bounds_budget.csv", &BOUND_BUDGET_HEADER, &budget)?;
    Ok(BoundsOutcome { asymmetry, budget })
}
