//! Simulation models for doubly truncated data and the Monte Carlo power
//! study.
//!
//! The target `X` lives on `[0, 1]`. Two truncation mechanisms are provided,
//! both indexed by a shape `rho > 0` and a width `sigma > 0`:
//!
//! * `M1` (interval sampling): `U = (1 + sigma) Z^rho - sigma`, `V = U + sigma`.
//! * `M2` (independent limits): `U = (1 + sigma) Z1 - sigma`,
//!   `V = sigma (Z2^(-rho) - 1)`.
//!
//! Sampling bias is ignorable in both models exactly when `rho = 1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biastest::{bootstrap_test, BootstrapOptions};
use crate::error::{Error, Result};
use crate::estimators::{fit_npmle, NpmleOptions};
use crate::rng::substream;
use crate::sample::{TruncatedObservation, TruncatedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    M1,
    M2,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::M1 => f.write_str("M1"),
            Model::M2 => f.write_str("M2"),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" | "1" => Ok(Model::M1),
            "M2" | "2" => Ok(Model::M2),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

/// Distribution of the target variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetLawRepr", into = "TargetLawRepr")]
pub enum TargetLaw {
    Uniform01,
    /// `Beta(1, b)`; `b = 1/2` in the power study.
    BetaOneB(f64),
    /// `Beta(a, 1)`; `a = 1/2` in the power study.
    BetaAOne(f64),
}

impl TargetLaw {
    /// Laws with a closed-form inverse CDF: `Beta(1, 1)`, `Beta(1, 1/2)` and
    /// `Beta(1/2, 1)`.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        match (a, b) {
            (a, b) if a == 1.0 && b == 1.0 => Ok(TargetLaw::Uniform01),
            (a, b) if a == 1.0 && b == 0.5 => Ok(TargetLaw::BetaOneB(b)),
            (a, b) if a == 0.5 && b == 1.0 => Ok(TargetLaw::BetaAOne(a)),
            (a, b) => Err(Error::UnsupportedLaw { a, b }),
        }
    }

    pub fn shape(&self) -> (f64, f64) {
        match *self {
            TargetLaw::Uniform01 => (1.0, 1.0),
            TargetLaw::BetaOneB(b) => (1.0, b),
            TargetLaw::BetaAOne(a) => (a, 1.0),
        }
    }

    /// Inverse CDF at `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            TargetLaw::Uniform01 => p,
            TargetLaw::BetaOneB(b) => 1.0 - (1.0 - p).powf(1.0 / b),
            TargetLaw::BetaAOne(a) => p.powf(1.0 / a),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match *self {
            TargetLaw::Uniform01 => x,
            TargetLaw::BetaOneB(b) => 1.0 - (1.0 - x).powf(b),
            TargetLaw::BetaAOne(a) => x.powf(a),
        }
    }
}

impl fmt::Display for TargetLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLaw::Uniform01 => f.write_str("uniform"),
            _ => {
                let (a, b) = self.shape();
                write!(f, "beta({a},{b})")
            }
        }
    }
}

impl FromStr for TargetLaw {
    type Err = Error;

    /// Accepts `uniform` or `beta(a,b)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "uniform" || t == "u(0,1)" {
            return Ok(TargetLaw::Uniform01);
        }
        let inner = t
            .strip_prefix("beta(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown target law '{s}'")))?;
        let parts: Vec<f64> = inner
            .split(',')
            .map(|p| parse_real(p.trim()))
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [a, b] => TargetLaw::beta(*a, *b),
            _ => Err(Error::InvalidArgument(format!("unknown target law '{s}'"))),
        }
    }
}

/// Parses a real number, also accepting fractions such as `1/2`.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::InvalidArgument(format!("not a number: '{s}'"));
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            Ok(num / den)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Serialize, Deserialize)]
struct TargetLawRepr(String);

impl TryFrom<TargetLawRepr> for TargetLaw {
    type Error = Error;
    fn try_from(r: TargetLawRepr) -> Result<Self> {
        r.0.parse()
    }
}

impl From<TargetLaw> for TargetLawRepr {
    fn from(t: TargetLaw) -> Self {
        TargetLawRepr(t.to_string())
    }
}

/// Truncation mechanism parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationModel {
    pub model: Model,
    pub rho: f64,
    pub sigma: f64,
}

impl TruncationModel {
    pub fn new(model: Model, rho: f64, sigma: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rho and sigma must be positive (rho={rho}, sigma={sigma})"
            )));
        }
        Ok(Self { model, rho, sigma })
    }

    /// Draws a truncation pair `(U, V)`.
    pub fn draw_limits<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let s = self.sigma;
        match self.model {
            Model::M1 => {
                let z: f64 = rng.random();
                let u = (1.0 + s) * z.powf(self.rho) - s;
                (u, u + s)
            }
            Model::M2 => {
                let z1: f64 = rng.random();
                // (0, 1] keeps Z2^(-rho) finite
                let z2: f64 = 1.0 - rng.random::<f64>();
                ((1.0 + s) * z1 - s, s * (z2.powf(-self.rho) - 1.0))
            }
        }
    }

    /// `G(x) = P(U <= x <= V)` in closed form.
    pub fn sampling_probability(&self, x: f64) -> Result<f64> {
        analytic_g(self.model, x, self.rho, self.sigma)
    }
}

/// Closed-form sampling probability `G(x)` for `x` in `(0, 1)`.
///
/// At `rho = 1` both models give the constant `sigma / (1 + sigma)`, a
/// truncation rate of `1 / (1 + sigma)`.
pub fn analytic_g(model: Model, x: f64, rho: f64, sigma: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::DomainError { x });
    }
    let inv = 1.0 / rho;
    Ok(match model {
        // (x + sigma) - x is not exact in floating point
        Model::M1 if rho == 1.0 => sigma / (1.0 + sigma),
        Model::M1 => (1.0 + sigma).powf(-inv) * ((x + sigma).powf(inv) - x.powf(inv)),
        Model::M2 => sigma.powf(inv) / (1.0 + sigma) * (x + sigma).powf(1.0 - inv),
    })
}

/// Inverse-CDF draw from the target law.
pub fn draw_target<R: Rng + ?Sized>(law: &TargetLaw, rng: &mut R) -> f64 {
    law.quantile(rng.random())
}

/// One proposal of the acceptance/rejection scheme: a target value and an
/// independent truncation pair, not yet filtered.
pub fn propose<R: Rng + ?Sized>(law: &TargetLaw, trunc: &TruncationModel, rng: &mut R) -> (f64, f64, f64) {
    let x = draw_target(law, rng);
    let (u, v) = trunc.draw_limits(rng);
    (x, u, v)
}

/// Draws `n` observations from the conditional law given `U <= X <= V`.
pub fn draw_truncated_sample<R: Rng + ?Sized>(
    law: &TargetLaw,
    trunc: &TruncationModel,
    n: usize,
    rng: &mut R,
) -> TruncatedSample {
    let mut obs = Vec::with_capacity(n);
    while obs.len() < n {
        let (x, u, v) = propose(law, trunc, rng);
        if u <= x && x <= v {
            obs.push(TruncatedObservation { x, u, v });
        }
    }
    TruncatedSample::new(obs).expect("accepted proposals satisfy u <= x <= v")
}

/// One cell of the power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McScenario {
    pub model: Model,
    pub rho: f64,
    pub sigma: f64,
    pub n: usize,
    pub target: TargetLaw,
    pub gammas: Vec<f64>,
    pub b: usize,
    pub trials: usize,
    pub seed: u64,
}

impl McScenario {
    pub fn new(model: Model, rho: f64, sigma: f64, n: usize) -> Self {
        Self {
            model,
            rho,
            sigma,
            n,
            target: TargetLaw::Uniform01,
            gammas: vec![0.1, 0.05, 0.01],
            b: 500,
            trials: 1000,
            seed: 1,
        }
    }

    pub fn truncation(&self) -> Result<TruncationModel> {
        TruncationModel::new(self.model, self.rho, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.truncation()?;
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.b == 0 {
            return Err(Error::InvalidArgument("b must be at least 1".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::InvalidArgument(format!("significance level {g} outside (0, 1)")));
        }
        Ok(())
    }

    /// Sample of trial `trial` and the bootstrap seed attached to it.
    pub fn trial_sample(&self, trial: usize) -> Result<(TruncatedSample, u64)> {
        let trunc = self.truncation()?;
        let mut rng = substream(self.seed, trial as u64);
        let sample = draw_truncated_sample(&self.target, &trunc, self.n, &mut rng);
        Ok((sample, rng.random()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub gammas: Vec<f64>,
    /// Proportion of used trials rejecting at each level.
    pub rejection_rate: Vec<f64>,
    pub rejections: Vec<usize>,
    pub trials_used: usize,
    pub trials_discarded: usize,
    pub mean_b_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub npmle: NpmleOptions,
    pub parallel: bool,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            npmle: NpmleOptions::default(),
            parallel: true,
        }
    }
}

enum TrialOutcome {
    Discarded,
    Tested { p_value: f64, b_used: usize },
}

fn run_trial(sc: &McScenario, opts: &McOptions, trial: usize) -> Result<TrialOutcome> {
    let (sample, boot_seed) = sc.trial_sample(trial)?;
    if fit_npmle(&sample, &opts.npmle).is_err() {
        return Ok(TrialOutcome::Discarded);
    }
    let boot = BootstrapOptions {
        b: sc.b,
        seed: boot_seed,
        npmle: opts.npmle,
        // trials are the unit of parallelism
        parallel: false,
    };
    match bootstrap_test(&sample, &boot) {
        Ok(r) => Ok(TrialOutcome::Tested {
            p_value: r.p_value,
            b_used: r.b_used,
        }),
        Err(Error::AllReplicatesFailed { .. }) | Err(Error::OriginalFitFailed(_)) => Ok(TrialOutcome::Discarded),
        Err(e) => Err(e),
    }
}

/// Rejection rates of the bias test over `scenario.trials` simulated samples.
///
/// Trials whose NPMLE cannot be computed are discarded and counted; a trial
/// rejects at level `gamma` when `p <= gamma`.
pub fn run_monte_carlo(scenario: &McScenario, opts: &McOptions) -> Result<McResult> {
    scenario.validate()?;
    let work = |t: usize| run_trial(scenario, opts, t);
    let outcomes: Vec<TrialOutcome> = if opts.parallel {
        (0..scenario.trials).into_par_iter().map(work).collect::<Result<_>>()?
    } else {
        (0..scenario.trials).map(work).collect::<Result<_>>()?
    };

    let mut rejections = vec![0usize; scenario.gammas.len()];
    let mut used = 0usize;
    let mut b_total = 0usize;
    for o in &outcomes {
        if let TrialOutcome::Tested { p_value, b_used } = *o {
            used += 1;
            b_total += b_used;
            for (r, &g) in rejections.iter_mut().zip(&scenario.gammas) {
                if p_value <= g {
                    *r += 1;
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::AllTrialsDiscarded {
            trials: scenario.trials,
        });
    }
    Ok(McResult {
        gammas: scenario.gammas.clone(),
        rejection_rate: rejections.iter().map(|&r| r as f64 / used as f64).collect(),
        rejections,
        trials_used: used,
        trials_discarded: scenario.trials - used,
        mean_b_used: b_total as f64 / used as f64,
    })
}

/// Number of trials of `scenario` whose original-sample NPMLE fails, without
/// running any bootstrap. Uses the same samples as [`run_monte_carlo`].
pub fn count_discards(scenario: &McScenario, opts: &McOptions) -> Result<usize> {
    scenario.validate()?;
    let work = |t: usize| -> Result<bool> {
        let (sample, _) = scenario.trial_sample(t)?;
        Ok(fit_npmle(&sample, &opts.npmle).is_err())
    };
    let flags: Vec<bool> = if opts.parallel {
        (0..scenario.trials).into_par_iter().map(work).collect::<Result<_>>()?
    } else {
        (0..scenario.trials).map(work).collect::<Result<_>>()?
    };
    Ok(flags.into_iter().filter(|&d| d).count())
}

/// The power-study grid: both models, `rho` in {1, 2, 6}, `sigma` in
/// {1/2, 1}, `n` in {100, 200}.
pub fn table_grid(trials: usize, b: usize, seed: u64) -> Vec<McScenario> {
    let mut out = Vec::new();
    for model in [Model::M1, Model::M2] {
        for n in [100, 200] {
            for sigma in [1.0, 0.5] {
                for rho in [1.0, 2.0, 6.0] {
                    let mut sc = McScenario::new(model, rho, sigma, n);
                    sc.trials = trials;
                    sc.b = b;
                    sc.seed = seed;
                    out.push(sc);
                }
            }
        }
    }
    out
}

/// Analytic `G` on an equispaced grid of `(0, 1)` for every model, `rho` in
/// {1, 2, 6} and `sigma` in {1/2, 1}. Rows are `(model, rho, sigma, x, G(x))`.
pub fn sampling_bias_curves(points: usize) -> Vec<(Model, f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for model in [Model::M1, Model::M2] {
        for sigma in [0.5, 1.0] {
            for rho in [1.0, 2.0, 6.0] {
                for i in 1..=points {
                    let x = i as f64 / (points + 1) as f64;
                    let g = analytic_g(model, x, rho, sigma).expect("x in (0,1)");
                    out.push((model, rho, sigma, x, g));
                }
            }
        }
    }
    out
}
