//! Real trigonometric polynomials and their extraction from circuits.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::circuit::ReuploadingParams;
use crate::concept::Concept;
use crate::error::{invalid, Error, Result};

/// Coefficients with magnitude below this are stored as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// `c0 + Σ_{ω=1..d} a_ω cos(ωx) + b_ω sin(ωx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    c0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FourierSeries {
    pub fn new(c0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid(format!("cosine and sine arrays differ in length: {} vs {}", a.len(), b.len())));
        }
        if !c0.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(invalid("Fourier coefficients must be finite"));
        }
        Ok(Self { c0, a, b })
    }

    pub fn constant(c0: f64) -> Result<Self> {
        Self::new(c0, Vec::new(), Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn cos_coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coefficients(&self) -> &[f64] {
        &self.b
    }

    /// `(a_ω, b_ω)`, zero beyond the degree. `omega` must be at least 1.
    pub fn coefficient(&self, omega: usize) -> (f64, f64) {
        assert!(omega >= 1, "frequency 0 is the constant term");
        match omega {
            w if w <= self.degree() => (self.a[w - 1], self.b[w - 1]),
            _ => (0.0, 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .fold(self.c0, |acc, (i, (a, b))| {
                let (s, c) = ((i + 1) as f64 * x).sin_cos();
                acc + a * c + b * s
            })
    }

    /// Total power `Σ (a_ω² + b_ω²)` of the non-constant part.
    pub fn oscillating_power(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|v| v * v).sum()
    }
}

impl Concept for FourierSeries {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

/// Evaluates `series` at `x`.
pub fn eval_series(series: &FourierSeries, x: f64) -> f64 {
    series.eval(x)
}

/// Fits the degree-`degree` series of `f` from `points` equispaced samples
/// on `[0, 2π)` with a discrete Fourier transform.
///
/// Exact when `f` is a trigonometric polynomial of degree at most `degree`
/// and `points > 2 * degree`.
pub fn fit_series(f: impl Fn(f64) -> f64, degree: usize, points: usize) -> Result<FourierSeries> {
    if points < 2 * degree + 1 {
        return Err(invalid(format!("{points} samples cannot resolve degree {degree}; need at least {}", 2 * degree + 1)));
    }
    let mut buf: Vec<Complex64> = (0..points)
        .map(|k| Complex64::new(f(TAU * k as f64 / points as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(points).process(&mut buf);

    let n = points as f64;
    let snap = |v: f64| if v.abs() < ZERO_THRESHOLD { 0.0 } else { v };
    // imaginary part of bin 0 is a rounding residue and is dropped
    let c0 = snap(buf[0].re / n);
    let a = (1..=degree).map(|w| snap(2.0 * buf[w].re / n)).collect();
    let b = (1..=degree).map(|w| snap(-2.0 * buf[w].im / n)).collect();
    FourierSeries::new(c0, a, b)
}

/// Number of DFT samples used to extract a degree-`layers` circuit.
pub fn extraction_points(layers: usize) -> usize {
    4 * layers + 4
}

/// The exact degree-`L` Fourier series of a re-uploading circuit.
pub fn extract_series(params: &ReuploadingParams) -> FourierSeries {
    let layers = params.layers();
    fit_series(|x| params.raw_probability(x), layers, extraction_points(layers))
        .expect("extraction grid always resolves the circuit degree")
}

/// Normalized power per frequency: entry `ω - 1` is
/// `(a_ω² + b_ω²) / Σ_ν (a_ν² + b_ν²)`. The constant term is excluded.
pub fn spectrum_distribution(series: &FourierSeries) -> Result<Vec<f64>> {
    let total = series.oscillating_power();
    if total == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(series
        .a
        .iter()
        .zip(&series.b)
        .map(|(a, b)| (a * a + b * b) / total)
        .collect())
}
