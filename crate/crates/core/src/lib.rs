//! Nonparametric inference for doubly truncated data.
//!
//! A target `X` is observed only when it falls between two random limits,
//! `U <= X <= V`. This crate computes the empirical CDF and the
//! Efron-Petrosian NPMLE of the distribution of `X`, tests whether the
//! induced sampling bias is ignorable with a simple-bootstrap sup-norm test,
//! and runs the Monte Carlo power study for two truncation models.

pub mod biastest;
pub mod cdf;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod rng;
pub mod sample;
pub mod simulate;

pub use biastest::{
    bootstrap_analysis, bootstrap_test, dn_statistic, se_ratio, BiasTestReport, BootstrapOptions, SeRatioCurve,
};
pub use cdf::{make_weighted_cdf, sup_distance, WeightedCdf};
pub use error::{Error, Result};
pub use estimators::{
    ecdf, fit_npmle, npmle_cdf, sampling_curve, FitDiagnostics, FitStatus, NpmleFit, NpmleOptions, SamplingCurve,
};
pub use sample::{validate_sample, RawRecord, TruncatedObservation, TruncatedSample, ValidatedSample};
pub use simulate::{analytic_g, run_monte_carlo, McOptions, McResult, McScenario, Model, TargetLaw};
