//! Exact simulation of the single-qubit data re-uploading circuit.
//!
//! The model is
//! `f(x) = |<0| Rot(θ_{L+1}) · [R_X(x) Rot(θ_1)] · [R_X(x) Rot(θ_2)] ⋯ [R_X(x) Rot(θ_L)] |0>|²`
//! with `Rot(θ) = R_Z(θ3) R_Y(θ2) R_Z(θ1)` and `R_P(α) = exp(-i α P / 2)`.
//! The product is read as a matrix product, so the gate acting first on
//! `|0>` is `Rot(θ_L)`.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::concept::Concept;
use crate::error::{invalid, Result};
use crate::rng::{self, label};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance on `|amplitude|²` leaving `[0, 1]` before the clamp.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitaryMatrix2 {
    m: [[Complex64; 2]; 2],
}

impl fmt::Debug for UnitaryMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.m.iter()).finish()
    }
}

impl UnitaryMatrix2 {
    pub const IDENTITY: Self = Self { m: [[ONE, ZERO], [ZERO, ONE]] };

    pub fn from_rows(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn rx(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        Self { m: [[Complex64::new(c, 0.0), mis], [mis, Complex64::new(c, 0.0)]] }
    }

    pub fn ry(angle: f64) -> Self {
        let (s, c) = (angle / 2.0).sin_cos();
        Self {
            m: [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
        }
    }

    pub fn rz(angle: f64) -> Self {
        let half = angle / 2.0;
        Self {
            m: [
                [Complex64::from_polar(1.0, -half), ZERO],
                [ZERO, Complex64::from_polar(1.0, half)],
            ],
        }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m }
    }

    pub fn apply(&self, state: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * state[0] + self.m[0][1] * state[1],
            self.m[1][0] * state[0] + self.m[1][1] * state[1],
        ]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p.m[i][j] - target).norm());
            }
        }
        worst
    }
}

/// The general single-qubit rotation `R_Z(θ3) R_Y(θ2) R_Z(θ1)`.
pub fn rot(theta1: f64, theta2: f64, theta3: f64) -> Result<UnitaryMatrix2> {
    if !(theta1.is_finite() && theta2.is_finite() && theta3.is_finite()) {
        return Err(invalid(format!("rotation angles must be finite: ({theta1}, {theta2}, {theta3})")));
    }
    Ok(UnitaryMatrix2::rz(theta3).mul(&UnitaryMatrix2::ry(theta2)).mul(&UnitaryMatrix2::rz(theta1)))
}

/// Angles of a data re-uploading circuit with `layers` encoding gates.
///
/// Row `l` (0-based) holds `θ_{l+1} = (θ1, θ2, θ3)`; there are `layers + 1`
/// rows. The rotation matrices are built once at construction.
#[derive(Clone, Debug)]
pub struct ReuploadingParams {
    angles: Vec<[f64; 3]>,
    seed: Option<u64>,
    gates: Vec<UnitaryMatrix2>,
}

impl PartialEq for ReuploadingParams {
    fn eq(&self, other: &Self) -> bool {
        self.angles == other.angles && self.seed == other.seed
    }
}

impl ReuploadingParams {
    pub fn new(angles: Vec<[f64; 3]>, seed: Option<u64>) -> Result<Self> {
        if angles.len() < 2 {
            return Err(invalid(format!(
                "need at least 2 angle rows (one layer plus the final rotation), got {}",
                angles.len()
            )));
        }
        let gates = angles
            .iter()
            .map(|t| rot(t[0], t[1], t[2]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { angles, seed, gates })
    }

    /// All angles zero, so every `Rot` is the identity and `f(x) = cos²(L x / 2)`.
    pub fn zeros(layers: usize) -> Result<Self> {
        Self::new(vec![[0.0; 3]; layers + 1], None)
    }

    /// Angles drawn i.i.d. uniform on `[0, 2π)` from the stream keyed by `seed`.
    pub fn random(layers: usize, seed: u64) -> Result<Self> {
        if layers == 0 {
            return Err(invalid("layers must be at least 1"));
        }
        let mut rng = rng::stream(seed, &[label::TARGET_ANGLES]);
        let angles = (0..=layers)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.0..TAU)))
            .collect();
        Self::new(angles, Some(seed))
    }

    pub fn layers(&self) -> usize {
        self.angles.len() - 1
    }

    pub fn angles(&self) -> &[[f64; 3]] {
        &self.angles
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `|<0|U(x)|0>|²` before the clamp.
    pub fn raw_probability(&self, x: f64) -> f64 {
        let amp = self.final_state(x, |_| {})[0];
        amp.norm_sqr()
    }

    /// Runs the state vector through the circuit, calling `inspect` after
    /// every gate.
    pub fn final_state(&self, x: f64, mut inspect: impl FnMut(&[Complex64; 2])) -> [Complex64; 2] {
        let encode = UnitaryMatrix2::rx(x);
        let layers = self.layers();
        let mut state = [ONE, ZERO];
        for gate in self.gates[..layers].iter().rev() {
            state = gate.apply(state);
            inspect(&state);
            state = encode.apply(state);
            inspect(&state);
        }
        state = self.gates[layers].apply(state);
        inspect(&state);
        state
    }
}

/// Evaluates the circuit at `x`, clamped to `[0, 1]`.
pub fn eval_circuit(params: &ReuploadingParams, x: f64) -> f64 {
    let p = params.raw_probability(x);
    debug_assert!(
        (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&p),
        "probability {p} outside [0, 1]"
    );
    p.clamp(0.0, 1.0)
}

impl Concept for ReuploadingParams {
    fn value(&self, x: f64) -> f64 {
        eval_circuit(self, x)
    }
}
