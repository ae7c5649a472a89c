//! Bias-variance decomposition of trained ensembles, closed-form risk-bound
//! curves and measurement-budget allocation.
//!
//! Every leading constant hidden in the big-O bounds is taken as 1, so the
//! bound functions describe shapes and trade-offs, not certified numbers.

use crate::concept::Concept;
use crate::error::{invalid, Error, Result};
use crate::learner::Predictor;
use crate::sampling::LabeledDataset;

/// Inputs to the bound formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Extra shot-equivalents paid per change of input.
    pub gamma: f64,
    /// Failure probability, in `(0, 1)`.
    pub delta: f64,
    /// Mean single-shot label variance.
    pub sigma_bar: f64,
    /// Lipschitz constant of the link.
    pub lipschitz: f64,
    /// Weight-norm budget `B`.
    pub weight_norm: f64,
    /// Operator norm `Δ` of the observable.
    pub observable_norm: f64,
    /// Approximation error `ε₁`.
    pub eps1: f64,
    /// Bound `M` on the approximation residual.
    pub residual_bound: f64,
    /// Feature count `D`.
    pub features: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            gamma: 0.0,
            delta: 0.01,
            sigma_bar: 1.0,
            lipschitz: 1.0,
            weight_norm: 1.0,
            observable_norm: 1.0,
            eps1: 0.0,
            residual_bound: 0.0,
            features: 1.0,
        }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        let rest = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("gamma", self.gamma),
            ("sigma_bar", self.sigma_bar),
            ("lipschitz", self.lipschitz),
            ("weight_norm", self.weight_norm),
            ("observable_norm", self.observable_norm),
            ("eps1", self.eps1),
            ("residual_bound", self.residual_bound),
            ("features", self.features),
        ];
        for (name, v) in rest {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    fn log_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    /// The `(c1, c2, c3)` that make [`risk_bound_cor1`] coincide with
    /// [`risk_bound_thm1`] when `ε₁ = M = 0`.
    pub fn with_asymmetry_constants(self) -> Self {
        let (l, b, d) = (self.lipschitz, self.weight_norm, self.observable_norm);
        let log = self.log_inv_delta();
        Self { c1: l * b * d, c2: l * b * (self.sigma_bar * log).sqrt(), c3: d * d * log.sqrt(), ..self }
    }
}

/// The five error rates of the iterative learner's bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRates {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
}

impl ErrorRates {
    pub fn new(c: &BoundConstants, n1: u64, ns: u64) -> Self {
        let (n1, ns) = (n1 as f64, ns as f64);
        let log = c.log_inv_delta();
        Self {
            eps1: c.eps1,
            eps2: (log / n1).powf(0.25),
            eps3: (1.0 / n1).sqrt(),
            eps4: (c.sigma_bar * log / (n1 * ns)).sqrt(),
            eps5: (log / n1).sqrt(),
        }
    }
}

/// Bound value with its additive terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundBreakdown {
    pub total: f64,
    /// `[LΔ√ε₁, LΔMε₂, LBΔε₃, LBε₄, Δ²ε₅]`.
    pub terms: [f64; 5],
    pub rates: ErrorRates,
}

/// `c₁/√N₁ + c₂/√(N₁N_s) + c₃/√N₁`.
pub fn risk_bound_cor1(c: &BoundConstants, n1: u64, ns: u64) -> f64 {
    let (n1, ns) = (n1 as f64, ns as f64);
    c.c1 * (1.0 / n1).sqrt() + c.c2 * (1.0 / (n1 * ns)).sqrt() + c.c3 * (1.0 / n1).sqrt()
}

/// `LΔ√ε₁ + LΔMε₂ + LBΔε₃ + LBε₄ + Δ²ε₅`.
pub fn risk_bound_thm1(c: &BoundConstants, n1: u64, ns: u64) -> BoundBreakdown {
    let r = ErrorRates::new(c, n1, ns);
    let (l, b, d, m) = (c.lipschitz, c.weight_norm, c.observable_norm, c.residual_bound);
    let terms = [l * d * r.eps1.sqrt(), l * d * m * r.eps2, l * b * d * r.eps3, l * b * r.eps4, d * d * r.eps5];
    BoundBreakdown { total: terms.iter().sum(), terms, rates: r }
}

/// The random-feature form `√ε₁ + Mε₂ + D(ε₃ + ε₄) + ε₅`.
pub fn risk_bound_rff(c: &BoundConstants, n1: u64, ns: u64) -> f64 {
    let r = ErrorRates::new(c, n1, ns);
    r.eps1.sqrt() + c.residual_bound * r.eps2 + c.features * (r.eps3 + r.eps4) + r.eps5
}

/// Ridge baseline bound `ε₁ + D²√(log(1/δ)/N₁)`.
pub fn erm_bound(c: &BoundConstants, n1: u64) -> f64 {
    c.eps1 + c.features * c.features * (c.log_inv_delta() / n1 as f64).sqrt()
}

/// Asymmetry bound under the budget `N_tot = N₁(N_s + γ)`:
/// `(c₁ + c₃)√((N_s+γ)/N_tot) + c₂√((N_s+γ)/(N_tot N_s))`.
/// Meaningful for `ntot >= ns + gamma`.
pub fn budget_bound(c: &BoundConstants, ntot: u64, ns: u64) -> f64 {
    let (ntot, ns) = (ntot as f64, ns as f64);
    let share = (ns + c.gamma) / ntot;
    c.c1 * share.sqrt() + c.c2 * (share / ns).sqrt() + c.c3 * share.sqrt()
}

/// The minimizing shot count `N_s* = (c₂γ / (c₁ + c₃))^{2/3}`.
pub fn optimal_shots(c: &BoundConstants) -> Result<f64> {
    let denom = c.c1 + c.c3;
    if !(denom > 0.0) {
        return Err(Error::DegenerateConstants);
    }
    Ok((c.c2 * c.gamma / denom).powf(2.0 / 3.0))
}

/// `(N_s*, N₁* = N_tot / (N_s* + γ))`.
pub fn optimal_allocation(c: &BoundConstants, ntot: u64) -> Result<(f64, f64)> {
    let ns = optimal_shots(c)?;
    Ok((ns, ntot as f64 / (ns + c.gamma)))
}

/// Splits a shot budget into training and validation sizes:
/// `N = ⌊N_tot/(N_s+γ)⌋`, `N₂ = max(1, round((1−f)N))`, `N₁ = N − N₂`.
pub fn allocate_budget(ntot: u64, ns: u64, gamma: f64, train_fraction: f64) -> Result<(usize, usize)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    if ns == 0 || !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("need ns >= 1 and finite gamma >= 0, got ns={ns}, gamma={gamma}")));
    }
    let per_point = ns as f64 + gamma;
    let total = (ntot as f64 / per_point).floor() as usize;
    let n2 = (((1.0 - train_fraction) * total as f64).round() as usize).max(1);
    if total <= n2 {
        return Err(Error::InfeasibleBudget(format!(
            "budget {ntot} at {per_point} shots per point leaves {total} points, no training data"
        )));
    }
    Ok((total - n2, n2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasVarianceReport {
    pub bias_sq: f64,
    pub variance: f64,
    pub mean_explicit_risk: f64,
    pub ensemble_size: usize,
    pub shots: u32,
}

/// Prediction table `[model][point]`.
pub fn prediction_table<P: Predictor>(ensemble: &[P], xs: &[f64]) -> Vec<Vec<f64>> {
    ensemble.iter().map(|h| xs.iter().map(|&x| h.predict(x)).collect()).collect()
}

/// Bias², variance and mean explicit risk of an ensemble on `test_xs`.
/// `shots` is carried through to the report.
pub fn bias_variance<P, C>(ensemble: &[P], target: &C, test_xs: &[f64], shots: u32) -> Result<BiasVarianceReport>
where
    P: Predictor,
    C: Concept + ?Sized,
{
    let table = prediction_table(ensemble, test_xs);
    let truth: Vec<f64> = test_xs.iter().map(|&x| target.value(x)).collect();
    bias_variance_from_table(&table, &truth, shots)
}

/// [`bias_variance`] on precomputed predictions `table[model][point]`.
pub fn bias_variance_from_table(table: &[Vec<f64>], truth: &[f64], shots: u32) -> Result<BiasVarianceReport> {
    let k = table.len();
    if k < 2 {
        return Err(Error::EnsembleTooSmall(k));
    }
    let n = truth.len();
    if n == 0 {
        return Err(invalid("no test inputs"));
    }
    if table.iter().any(|row| row.len() != n) {
        return Err(invalid("prediction rows differ in length from the test set"));
    }
    let (mut bias_sq, mut variance, mut risk) = (0.0, 0.0, 0.0);
    for (j, f) in truth.iter().enumerate() {
        let mean = table.iter().map(|row| row[j]).sum::<f64>() / k as f64;
        bias_sq += (mean - f).powi(2);
        for row in table {
            variance += (mean - row[j]).powi(2);
            risk += (row[j] - f).powi(2);
        }
    }
    let n = n as f64;
    Ok(BiasVarianceReport {
        bias_sq: bias_sq / n,
        variance: variance / (n * k as f64),
        mean_explicit_risk: risk / (n * k as f64),
        ensemble_size: k,
        shots,
    })
}

/// Ensemble-mean empirical risk `(h − ȳ)²` and the noise floor `(f − ȳ)²` on
/// a noisy set.
pub fn ensemble_implicit_risk<P, C>(ensemble: &[P], target: &C, noisy: &LabeledDataset) -> Result<(f64, f64)>
where
    P: Predictor,
    C: Concept + ?Sized,
{
    if ensemble.is_empty() || noisy.is_empty() {
        return Err(invalid("need a non-empty ensemble and noisy set"));
    }
    let n = noisy.len() as f64;
    let floor = noisy.iter().map(|(x, y)| (target.value(x) - y).powi(2)).sum::<f64>() / n;
    let implicit = ensemble
        .iter()
        .map(|h| noisy.iter().map(|(x, y)| (h.predict(x) - y).powi(2)).sum::<f64>() / n)
        .sum::<f64>()
        / ensemble.len() as f64;
    Ok((implicit, floor))
}
