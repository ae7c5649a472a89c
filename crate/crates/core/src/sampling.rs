//! Finite-shot label generation and dataset extraction.
//!
//! Labels are empirical means of `shots` measurement outcomes. For the
//! projector `|0><0|` each outcome is a Bernoulli draw with success
//! probability `f(x)`; for a general observable outcomes are eigenvalues
//! drawn by inverse CDF from an [`EigenDistribution`]. Both estimators are
//! unbiased with variance `σ²(x) / shots`.

use std::f64::consts::TAU;

use rand::Rng;

use crate::concept::Concept;
use crate::error::{invalid, Result};

const PROBABILITY_SLACK: f64 = 1e-12;

fn check_shots(shots: u32) -> Result<()> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    Ok(())
}

/// Mean of `shots` Bernoulli(`p`) outcomes. An outcome is 1 when a uniform
/// draw on `[0, 1)` falls below `p`.
pub fn sample_mean_label<R: Rng + ?Sized>(p: f64, shots: u32, rng: &mut R) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(invalid(format!("probability {p} outside [0, 1]")));
    }
    check_shots(shots)?;
    let p = p.clamp(0.0, 1.0);
    let hits = (0..shots).filter(|_| rng.random::<f64>() < p).count();
    Ok(hits as f64 / shots as f64)
}

/// Outcome distribution of an observable in some input state.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDistribution {
    eigenvalues: Vec<f64>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EigenDistribution {
    pub fn new(eigenvalues: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != probabilities.len() {
            return Err(invalid(format!(
                "need matching non-empty eigenvalue/probability arrays, got {} and {}",
                eigenvalues.len(),
                probabilities.len()
            )));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(invalid("eigenvalues must be finite"));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("probabilities must be non-negative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SLACK {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        let cumulative = probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self { eigenvalues, probabilities, cumulative })
    }

    /// Outcomes `{0, 1}` of `|0><0|` with `P(1) = p`.
    pub fn projector(p: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().zip(&self.probabilities).map(|(l, p)| l * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.eigenvalues.iter().zip(&self.probabilities).map(|(l, p)| p * (l - m).powi(2)).sum()
    }

    /// Inverse-CDF draw: the lowest index whose cumulative mass exceeds `u`.
    fn outcome(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|c| *c <= u);
        // rounding can leave the last cumulative entry a hair below u
        self.eigenvalues[k.min(self.eigenvalues.len() - 1)]
    }
}

/// Mean of `shots` i.i.d. outcomes drawn from `dist`.
pub fn sample_eigen_label<R: Rng + ?Sized>(dist: &EigenDistribution, shots: u32, rng: &mut R) -> Result<f64> {
    check_shots(shots)?;
    let total: f64 = (0..shots).map(|_| dist.outcome(rng.random::<f64>())).sum();
    Ok(total / shots as f64)
}

/// Inputs with empirical-mean labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub shots: u32,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, shots: u32, seed: u64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid(format!("{} inputs but {} labels", xs.len(), ys.len())));
        }
        check_shots(shots)?;
        Ok(Self { xs, ys, shots, seed })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// `n` equispaced points `2πk/n` on `[0, 2π)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// `n` inputs drawn uniformly from `[0, 2π)`.
pub fn draw_inputs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Labels every input with a `shots`-shot empirical mean of `target`.
pub fn label_inputs<C, R>(target: &C, xs: &[f64], shots: u32, rng: &mut R) -> Result<Vec<f64>>
where
    C: Concept + ?Sized,
    R: Rng + ?Sized,
{
    xs.iter().map(|&x| sample_mean_label(target.value(x), shots, rng)).collect()
}

/// Draws `n` uniform inputs, then labels them, from the single stream `rng`.
/// `seed` is recorded on the dataset.
pub fn build_dataset<C, R>(target: &C, n: usize, shots: u32, rng: &mut R, seed: u64) -> Result<LabeledDataset>
where
    C: Concept + ?Sized,
    R: Rng + ?Sized,
{
    check_shots(shots)?;
    let xs = draw_inputs(n, rng);
    let ys = label_inputs(target, &xs, shots, rng)?;
    LabeledDataset::new(xs, ys, shots, seed)
}
