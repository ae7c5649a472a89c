//! Normalized trigonometric feature maps and their kernels.
//!
//! A map is a list of "blocks": an optional constant block `1` and one
//! `(cos ωx, sin ωx)` block per listed frequency. Every map is scaled by
//! `1/sqrt(blocks)`, so `||φ(x)||₂ = 1` for all `x` and `k(x, x) = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::fourier::{spectrum_distribution, FourierSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// The whole spectrum `1..=L` of a known target.
    Full,
    /// Frequencies `1..=d`.
    Truncated,
    /// A sampled multiset of frequencies.
    Rff,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::Full => "full",
            MapKind::Truncated => "truncated",
            MapKind::Rff => "rff",
        })
    }
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MapKind::Full),
            "truncated" => Ok(MapKind::Truncated),
            "rff" => Ok(MapKind::Rff),
            other => Err(Error::Parse(format!("unknown feature map kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    kind: MapKind,
    frequencies: Vec<u32>,
    includes_constant: bool,
    scale: f64,
}

impl FeatureMap {
    pub fn new(kind: MapKind, frequencies: Vec<u32>, includes_constant: bool) -> Result<Self> {
        if frequencies.contains(&0) {
            return Err(invalid("frequencies must be positive; the constant is a separate flag"));
        }
        let blocks = frequencies.len() + usize::from(includes_constant);
        if blocks == 0 {
            return Err(invalid("feature map has no blocks"));
        }
        Ok(Self { kind, frequencies, includes_constant, scale: 1.0 / (blocks as f64).sqrt() })
    }

    /// Constant plus frequencies `1..=d`.
    pub fn truncated(d: u32) -> Self {
        Self::new(MapKind::Truncated, (1..=d).collect(), true).expect("constant block is always present")
    }

    /// Constant plus every frequency of a degree-`degree` target.
    pub fn full(degree: u32) -> Self {
        Self::new(MapKind::Full, (1..=degree).collect(), true).expect("constant block is always present")
    }

    pub fn rff(frequencies: Vec<u32>, includes_constant: bool) -> Result<Self> {
        Self::new(MapKind::Rff, frequencies, includes_constant)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn frequencies(&self) -> &[u32] {
        &self.frequencies
    }

    pub fn includes_constant(&self) -> bool {
        self.includes_constant
    }

    pub fn blocks(&self) -> usize {
        self.frequencies.len() + usize::from(self.includes_constant)
    }

    pub fn dimension(&self) -> usize {
        2 * self.frequencies.len() + usize::from(self.includes_constant)
    }

    /// Writes `φ(x)` into `out`, which must have length [`Self::dimension`].
    pub fn phi_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension());
        let mut i = 0;
        if self.includes_constant {
            out[0] = self.scale;
            i = 1;
        }
        for &w in &self.frequencies {
            let (s, c) = (w as f64 * x).sin_cos();
            out[i] = self.scale * c;
            out[i + 1] = self.scale * s;
            i += 2;
        }
    }

    pub fn phi(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.phi_into(x, &mut out);
        out
    }

    /// `<φ(x), φ(x2)>` in closed form.
    pub fn kernel(&self, x: f64, x2: f64) -> f64 {
        let d = x - x2;
        let mut acc = if self.includes_constant { 1.0 } else { 0.0 };
        for &w in &self.frequencies {
            acc += (w as f64 * d).cos();
        }
        acc / self.blocks() as f64
    }

    /// Row-major `n × dimension` matrix of features for `xs`.
    pub fn design_matrix(&self, xs: &[f64]) -> Vec<f64> {
        let dim = self.dimension();
        let mut out = vec![0.0; xs.len() * dim];
        for (row, &x) in out.chunks_exact_mut(dim).zip(xs) {
            self.phi_into(x, row);
        }
        out
    }

    /// Weights `w` with `<w, φ(x)>` equal to the projection of `series` onto
    /// the map's frequencies. Coefficients are rescaled by `sqrt(blocks)`;
    /// a frequency listed `m` times gets `1/m` of its coefficient per copy.
    /// Exact for truncated maps with `d >= series.degree()`.
    pub fn weights_for_series(&self, series: &FourierSeries) -> Vec<f64> {
        let root = (self.blocks() as f64).sqrt();
        let mut multiplicity: BTreeMap<u32, usize> = BTreeMap::new();
        for &w in &self.frequencies {
            *multiplicity.entry(w).or_default() += 1;
        }
        let mut out = Vec::with_capacity(self.dimension());
        if self.includes_constant {
            out.push(root * series.c0());
        }
        for &w in &self.frequencies {
            let (a, b) = series.coefficient(w as usize);
            let m = multiplicity[&w] as f64;
            out.push(root * a / m);
            out.push(root * b / m);
        }
        out
    }
}

/// Default weight-norm budget for a map that must represent `series`:
/// `sqrt(blocks) · (|c0| + Σ (|a_ω| + |b_ω|))`.
pub fn default_weight_budget(map: &FeatureMap, series: &FourierSeries) -> f64 {
    let l1: f64 = series.c0().abs()
        + series.cos_coefficients().iter().chain(series.sin_coefficients()).map(|v| v.abs()).sum::<f64>();
    (map.blocks() as f64).sqrt() * l1
}

/// Draws `d_rff` frequencies i.i.d. with replacement from the power spectrum
/// of `series`. The returned map includes the constant block.
pub fn sample_rff_map<R: Rng + ?Sized>(series: &FourierSeries, d_rff: usize, rng: &mut R) -> Result<FeatureMap> {
    if d_rff == 0 {
        return Err(invalid("RFF dimension must be at least 1"));
    }
    let probs = spectrum_distribution(series)?;
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let last_support = probs.iter().rposition(|p| *p > 0.0).expect("non-degenerate spectrum has support");
    let frequencies = (0..d_rff)
        .map(|_| {
            let u: f64 = rng.random();
            let k = cumulative.partition_point(|c| *c <= u).min(last_support);
            (k + 1) as u32
        })
        .collect();
    FeatureMap::rff(frequencies, true)
}
