//! Learning the expectation values of parameterized quantum circuits from
//! finite-shot measurement labels.
//!
//! The crate covers the whole pipeline: exact simulation of a single-qubit
//! data re-uploading circuit, extraction of its Fourier series, shot-noise
//! label sampling, trigonometric feature maps, the kernelized Alphatron and
//! ridge learners, and the risk-bound and bias-variance analysis used to
//! study how to split a measurement budget between inputs and shots.

pub mod analysis;
pub mod circuit;
pub mod concept;
pub mod error;
pub mod features;
pub mod fourier;
pub mod learner;
pub mod persist;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use analysis::{
    allocate_budget, bias_variance, budget_bound, erm_bound, optimal_shots, risk_bound_cor1, risk_bound_rff,
    risk_bound_thm1, BiasVarianceReport, BoundBreakdown, BoundConstants,
};
pub use circuit::{eval_circuit, ReuploadingParams, UnitaryMatrix2};
pub use concept::Concept;
pub use error::{Error, Result};
pub use features::{sample_rff_map, FeatureMap, MapKind};
pub use fourier::{extract_series, spectrum_distribution, FourierSeries};
pub use learner::{
    alphatron_train, erm_fit, erm_select, estimate_risks, explicit_risk, AlphatronConfig, Form, LinkFunction,
    Predictor, RiskReport, TrainedHypothesis, Weights,
};
pub use sampling::{build_dataset, sample_mean_label, EigenDistribution, LabeledDataset};
