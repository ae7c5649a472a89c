//! Link functions, the kernelized iterative learner, the ridge baseline and
//! risk estimates.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::concept::Concept;
use crate::error::{invalid, Error, Result};
use crate::features::FeatureMap;
use crate::sampling::LabeledDataset;

/// Regularization strengths searched by [`erm_select`] by default.
pub const RIDGE_GRID: [f64; 18] = [
    0.006, 0.015, 0.03, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 5.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0,
];

/// Feature dimension up to which training keeps an explicit weight vector.
pub const DEFAULT_PRIMAL_THRESHOLD: usize = 4096;

/// Largest training set the dual form will accept (its Gram matrix is
/// quadratic in this).
pub const DUAL_MAX_POINTS: usize = 4096;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clamps to `[0, 1]`.
pub fn clip01(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else if v > 1.0 {
        1.0
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkFunction {
    Clip01,
    Identity,
}

impl LinkFunction {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            LinkFunction::Clip01 => clip01(v),
            LinkFunction::Identity => v,
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkFunction::Clip01 => "clip01",
            LinkFunction::Identity => "identity",
        })
    }
}

impl FromStr for LinkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clip01" => Ok(LinkFunction::Clip01),
            "identity" => Ok(LinkFunction::Identity),
            other => Err(Error::Parse(format!("unknown link function `{other}`"))),
        }
    }
}

/// Anything that maps an input to a prediction.
pub trait Predictor {
    fn predict(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Predictor for F {
    fn predict(&self, x: f64) -> f64 {
        self(x)
    }
}

/// How a hypothesis stores its linear part.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    /// `w` over features; the score is `<w, φ(x)>`.
    Primal(Vec<f64>),
    /// `α` over training inputs; the score is `Σ α_i k(x, x_i)`.
    Dual { alphas: Vec<f64>, support_xs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedHypothesis {
    pub map: FeatureMap,
    pub link: LinkFunction,
    pub weights: Weights,
    /// Iteration whose hypothesis was kept (1-based); 0 for closed-form fits.
    pub selected_iteration: usize,
    /// Validation risk per iteration (or per regularization strength).
    pub history: Vec<f64>,
    /// Set when no validation data was available and the last candidate was kept.
    pub selection_fallback: bool,
    /// Ridge strength for closed-form fits.
    pub regularization: Option<f64>,
}

impl TrainedHypothesis {
    pub fn zero(map: FeatureMap, link: LinkFunction) -> Self {
        let dim = map.dimension();
        Self {
            map,
            link,
            weights: Weights::Primal(vec![0.0; dim]),
            selected_iteration: 0,
            history: Vec::new(),
            selection_fallback: false,
            regularization: None,
        }
    }

    /// The linear score before the link.
    pub fn score(&self, x: f64) -> f64 {
        match &self.weights {
            Weights::Primal(w) => {
                let mut phi = vec![0.0; self.map.dimension()];
                self.map.phi_into(x, &mut phi);
                dot(w, &phi)
            }
            Weights::Dual { alphas, support_xs } => {
                alphas.iter().zip(support_xs).map(|(a, &xi)| a * self.map.kernel(x, xi)).sum()
            }
        }
    }

    pub fn predict_many(&self, xs: &[f64]) -> Vec<f64> {
        match &self.weights {
            Weights::Primal(w) => {
                let mut phi = vec![0.0; self.map.dimension()];
                xs.iter()
                    .map(|&x| {
                        self.map.phi_into(x, &mut phi);
                        self.link.apply(dot(w, &phi))
                    })
                    .collect()
            }
            Weights::Dual { .. } => xs.iter().map(|&x| self.predict(x)).collect(),
        }
    }

    /// Same hypothesis with `w = Σ α_i φ(x_i)`.
    pub fn to_primal(&self) -> Self {
        let weights = match &self.weights {
            Weights::Primal(w) => w.clone(),
            Weights::Dual { alphas, support_xs } => {
                let dim = self.map.dimension();
                let mut w = vec![0.0; dim];
                let mut phi = vec![0.0; dim];
                for (a, &x) in alphas.iter().zip(support_xs) {
                    self.map.phi_into(x, &mut phi);
                    w.iter_mut().zip(&phi).for_each(|(wi, p)| *wi += a * p);
                }
                w
            }
        };
        Self { weights: Weights::Primal(weights), ..self.clone() }
    }
}

impl Predictor for TrainedHypothesis {
    fn predict(&self, x: f64) -> f64 {
        self.link.apply(self.score(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// Primal when the feature dimension is at most the primal threshold.
    Auto,
    Primal,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphatronConfig {
    pub rate: f64,
    pub iters: usize,
    pub form: Form,
    pub primal_threshold: usize,
}

impl Default for AlphatronConfig {
    fn default() -> Self {
        Self { rate: 1.0, iters: 50, form: Form::Auto, primal_threshold: DEFAULT_PRIMAL_THRESHOLD }
    }
}

impl AlphatronConfig {
    /// Learning rate `1/L` for the given link.
    pub fn for_link(link: LinkFunction) -> Self {
        Self { rate: 1.0 / link.lipschitz(), ..Self::default() }
    }
}

fn mean_sq(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (sum, n) = pairs.fold((0.0, 0usize), |(s, n), (a, b)| (s + (a - b).powi(2), n + 1));
    sum / n as f64
}

/// Tracks the first candidate with the lowest validation risk.
struct Selection<T> {
    best: Option<(usize, f64, T)>,
}

impl<T> Selection<T> {
    fn offer(&mut self, index: usize, risk: f64, candidate: impl FnOnce() -> T) {
        if self.best.as_ref().is_none_or(|(_, r, _)| risk < *r) {
            self.best = Some((index, risk, candidate()));
        }
    }
}

/// Runs `iters` rounds of `α_i += (λ/N₁)(ȳ_i − u(Σ_j α_j k(x_i, x_j)))`
/// from `α = 0`, scores every intermediate hypothesis `h^t` (`t = 1..=iters`,
/// the hypothesis after `t` updates) on the noisy validation labels, and
/// returns the first one with the lowest validation risk.
///
/// In primal form the same update is carried as `w = Σ α_i φ(x_i)`.
pub fn alphatron_train(
    train: &LabeledDataset,
    val: &LabeledDataset,
    map: &FeatureMap,
    link: LinkFunction,
    config: &AlphatronConfig,
) -> Result<TrainedHypothesis> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(config.rate > 0.0 && config.rate.is_finite()) {
        return Err(invalid(format!("learning rate must be positive, got {}", config.rate)));
    }
    if config.iters == 0 {
        return Err(invalid("at least one iteration is required"));
    }
    let primal = match config.form {
        Form::Auto => map.dimension() <= config.primal_threshold,
        Form::Primal => true,
        Form::Dual => false,
    };
    if primal {
        Ok(train_primal(train, val, map, link, config))
    } else if train.len() > DUAL_MAX_POINTS {
        Err(Error::MemoryGuard(train.len()))
    } else {
        Ok(train_dual(train, val, map, link, config))
    }
}

fn train_primal(
    train: &LabeledDataset,
    val: &LabeledDataset,
    map: &FeatureMap,
    link: LinkFunction,
    config: &AlphatronConfig,
) -> TrainedHypothesis {
    let dim = map.dimension();
    let phi = map.design_matrix(&train.xs);
    let phi_val = map.design_matrix(&val.xs);
    let step = config.rate / train.len() as f64;

    let mut w = vec![0.0; dim];
    let mut delta = vec![0.0; dim];
    let mut history = Vec::with_capacity(config.iters);
    let mut selection = Selection { best: None };
    for t in 1..=config.iters {
        delta.fill(0.0);
        for (row, y) in phi.chunks_exact(dim).zip(&train.ys) {
            let r = y - link.apply(dot(row, &w));
            delta.iter_mut().zip(row).for_each(|(d, p)| *d += r * p);
        }
        w.iter_mut().zip(&delta).for_each(|(wi, d)| *wi += step * d);

        if !val.is_empty() {
            let risk = mean_sq(phi_val.chunks_exact(dim).map(|row| link.apply(dot(row, &w))).zip(val.ys.iter().copied()));
            history.push(risk);
            selection.offer(t, risk, || w.clone());
        }
    }
    let (selected_iteration, weights, selection_fallback) = match selection.best {
        Some((t, _, best)) => (t, best, false),
        None => (config.iters, w, true),
    };
    TrainedHypothesis {
        map: map.clone(),
        link,
        weights: Weights::Primal(weights),
        selected_iteration,
        history,
        selection_fallback,
        regularization: None,
    }
}

fn train_dual(
    train: &LabeledDataset,
    val: &LabeledDataset,
    map: &FeatureMap,
    link: LinkFunction,
    config: &AlphatronConfig,
) -> TrainedHypothesis {
    let n = train.len();
    let gram: Vec<f64> = train.xs.iter().flat_map(|&a| train.xs.iter().map(move |&b| map.kernel(a, b))).collect();
    let cross: Vec<f64> = val.xs.iter().flat_map(|&a| train.xs.iter().map(move |&b| map.kernel(a, b))).collect();
    let step = config.rate / n as f64;

    let mut alphas = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    let mut history = Vec::with_capacity(config.iters);
    let mut selection = Selection { best: None };
    for t in 1..=config.iters {
        for ((r, row), y) in residuals.iter_mut().zip(gram.chunks_exact(n)).zip(&train.ys) {
            *r = y - link.apply(dot(row, &alphas));
        }
        alphas.iter_mut().zip(&residuals).for_each(|(a, r)| *a += step * r);

        if !val.is_empty() {
            let risk = mean_sq(cross.chunks_exact(n).map(|row| link.apply(dot(row, &alphas))).zip(val.ys.iter().copied()));
            history.push(risk);
            selection.offer(t, risk, || alphas.clone());
        }
    }
    let (selected_iteration, alphas, selection_fallback) = match selection.best {
        Some((t, _, best)) => (t, best, false),
        None => (config.iters, alphas, true),
    };
    TrainedHypothesis {
        map: map.clone(),
        link,
        weights: Weights::Dual { alphas, support_xs: train.xs.clone() },
        selected_iteration,
        history,
        selection_fallback,
        regularization: None,
    }
}

/// Ridge regression with identity link: minimizes
/// `(1/N₁) Σ (<w, φ(x_i)> − ȳ_i)² + C ||w||² / N₁`, i.e. solves
/// `(ΦᵀΦ + C I) w = Φᵀ ȳ`.
///
/// For `C = 0` (or a system that fails Cholesky) the minimum-norm
/// least-squares solution is returned, which is the pseudo-inverse answer.
pub fn erm_fit(train: &LabeledDataset, map: &FeatureMap, reg: f64) -> Result<TrainedHypothesis> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(invalid(format!("regularization must be finite and non-negative, got {reg}")));
    }
    let dim = map.dimension();
    let phi = DMatrix::from_row_slice(train.len(), dim, &map.design_matrix(&train.xs));
    let y = DVector::from_column_slice(&train.ys);

    let cholesky = (reg > 0.0)
        .then(|| {
            let a = phi.tr_mul(&phi) + DMatrix::identity(dim, dim) * reg;
            a.cholesky().map(|c| c.solve(&phi.tr_mul(&y)))
        })
        .flatten();
    let w = match cholesky {
        Some(w) => w,
        None => phi
            .svd(true, true)
            .solve(&y, 1e-12)
            .map_err(|e| invalid(format!("least-squares solve failed: {e}")))?,
    };
    Ok(TrainedHypothesis {
        map: map.clone(),
        link: LinkFunction::Identity,
        weights: Weights::Primal(w.as_slice().to_vec()),
        selected_iteration: 0,
        history: Vec::new(),
        selection_fallback: false,
        regularization: Some(reg),
    })
}

/// Fits [`erm_fit`] for every strength in `grid` and keeps the first one with
/// the lowest validation risk. Without validation data the last strength is
/// kept and the fallback flag is set.
pub fn erm_select(
    train: &LabeledDataset,
    val: &LabeledDataset,
    map: &FeatureMap,
    grid: &[f64],
) -> Result<TrainedHypothesis> {
    if grid.is_empty() {
        return Err(invalid("regularization grid is empty"));
    }
    let mut history = Vec::with_capacity(grid.len());
    let mut selection = Selection { best: None };
    let mut last = None;
    for (i, &c) in grid.iter().enumerate() {
        let hyp = erm_fit(train, map, c)?;
        if !val.is_empty() {
            let risk = empirical_risk(&hyp, val);
            history.push(risk);
            selection.offer(i, risk, || hyp.clone());
        }
        last = Some(hyp);
    }
    let (mut hyp, fallback) = match selection.best {
        Some((_, _, h)) => (h, false),
        None => (last.expect("grid is non-empty"), true),
    };
    hyp.history = history;
    hyp.selection_fallback = fallback;
    Ok(hyp)
}

/// Risk estimates against a known target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskReport {
    /// Mean `(h − f)²` over the test inputs.
    pub explicit: f64,
    /// Estimate of `E[(h − ȳ)²]`: `(h − f)²` plus the noise floor, on the noisy set.
    pub implicit: Option<f64>,
    /// Mean `(h − ȳ)²` on the noisy set.
    pub empirical: Option<f64>,
    /// Mean `(f − ȳ)²` on the noisy set.
    pub noise_floor: Option<f64>,
}

pub fn explicit_risk<P, C>(h: &P, target: &C, xs: &[f64]) -> f64
where
    P: Predictor + ?Sized,
    C: Concept + ?Sized,
{
    mean_sq(xs.iter().map(|&x| (h.predict(x), target.value(x))))
}

pub fn empirical_risk<P: Predictor + ?Sized>(h: &P, data: &LabeledDataset) -> f64 {
    mean_sq(data.iter().map(|(x, y)| (h.predict(x), y)))
}

pub fn estimate_risks<P, C>(h: &P, target: &C, test_xs: &[f64], noisy: Option<&LabeledDataset>) -> Result<RiskReport>
where
    P: Predictor + ?Sized,
    C: Concept + ?Sized,
{
    if test_xs.is_empty() {
        return Err(invalid("no test inputs"));
    }
    let explicit = explicit_risk(h, target, test_xs);
    let Some(noisy) = noisy else {
        return Ok(RiskReport { explicit, implicit: None, empirical: None, noise_floor: None });
    };
    if noisy.is_empty() {
        return Err(invalid("noisy test set is empty"));
    }
    let mut fit = 0.0;
    let mut floor = 0.0;
    let mut emp = 0.0;
    for (x, y) in noisy.iter() {
        let (hx, fx) = (h.predict(x), target.value(x));
        fit += (hx - fx).powi(2);
        floor += (fx - y).powi(2);
        emp += (hx - y).powi(2);
    }
    let n = noisy.len() as f64;
    Ok(RiskReport {
        explicit,
        implicit: Some((fit + floor) / n),
        empirical: Some(emp / n),
        noise_floor: Some(floor / n),
    })
}
