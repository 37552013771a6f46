//! Test of ignorable sampling bias.
//!
//! The statistic is `D_n = sup_x |F_n(x) - F_n^*(x)|`, the largest gap between
//! the NPMLE and the ECDF. Its null law is approximated by the simple
//! bootstrap: triplets are resampled with replacement and each replicate
//! contributes
//!
//! ```text
//! D_n^b = max_x |F_n^b(x) - F_n(x) + F_n^*(x) - F_n^{*,b}(x)|
//! ```
//!
//! over the original distinct `X_i`. Centering around `F_n - F_n^*` mimics
//! the null without resampling under it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdf::sup_distance;
use crate::error::{Error, Result};
use crate::estimators::{ecdf, fit_npmle, npmle_cdf, NpmleFit, NpmleOptions};
use crate::rng::substream;
use crate::sample::TruncatedSample;

/// Replicate statistics within this distance of `D_n` count as ties (`>=`).
///
/// Absorbs floating-point noise when both are mathematically equal, e.g. zero
/// for samples without truncation information.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub b: usize,
    pub seed: u64,
    pub npmle: NpmleOptions,
    /// Run replicates on the rayon pool. The result is identical either way.
    pub parallel: bool,
}

impl BootstrapOptions {
    pub fn new(b: usize, seed: u64) -> Self {
        Self {
            b,
            seed,
            npmle: NpmleOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTestReport {
    pub n: usize,
    pub d_n: f64,
    pub p_value: f64,
    pub b_requested: usize,
    /// Replicates whose NPMLE could be computed.
    pub b_used: usize,
    pub bootstrap_stats: Vec<f64>,
    pub alpha_n: f64,
    pub seed: u64,
}

impl BiasTestReport {
    pub fn b_failed(&self) -> usize {
        self.b_requested - self.b_used
    }

    pub fn rejects_at(&self, gamma: f64) -> bool {
        self.p_value <= gamma
    }
}

/// Ratio of the bootstrap standard error of `F_n` to the empirical standard
/// error of `F_n^*` at each distinct `X_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeRatioCurve {
    pub points: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Bootstrap standard error of `F_n(x)`.
    pub se_npmle: Vec<f64>,
    /// `sqrt(F_n^*(x) (1 - F_n^*(x)) / n)`.
    pub se_ecdf: Vec<f64>,
    /// Replicates used.
    pub b: usize,
}

impl SeRatioCurve {
    pub fn max_ratio(&self) -> f64 {
        self.ratio.iter().copied().fold(0.0, f64::max)
    }
}

/// `D_n` for a converged fit of `sample`.
pub fn dn_statistic(sample: &TruncatedSample, fit: &NpmleFit) -> Result<f64> {
    let f_n = npmle_cdf(fit, sample)?;
    sup_distance(&f_n, &ecdf(sample), &sample.distinct_xs())
}

/// One bootstrap replicate: `F_n^b` on the original grid and `D_n^b`.
struct Replicate {
    npmle_on_grid: Vec<f64>,
    stat: f64,
}

struct BootstrapRun {
    d_n: f64,
    alpha_n: f64,
    grid: Vec<f64>,
    ecdf_on_grid: Vec<f64>,
    replicates: Vec<Replicate>,
}

fn run_replicate(
    sample: &TruncatedSample,
    grid: &[f64],
    centre: &[f64],
    opts: &BootstrapOptions,
    r: usize,
) -> Option<Replicate> {
    let n = sample.len();
    let mut rng = substream(opts.seed, r as u64);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let resample = sample.resample(&idx);
    let (fit, _) = fit_npmle(&resample, &opts.npmle).ok()?;
    let f_b = npmle_cdf(&fit, &resample).ok()?;
    let e_b = ecdf(&resample);
    let npmle_on_grid = f_b.eval_many(grid);
    let stat = grid
        .iter()
        .zip(&npmle_on_grid)
        .zip(centre)
        .map(|((&x, &fb), &c)| (fb - e_b.eval(x) - c).abs())
        .fold(0.0, f64::max);
    Some(Replicate { npmle_on_grid, stat })
}

fn run_bootstrap(sample: &TruncatedSample, opts: &BootstrapOptions) -> Result<BootstrapRun> {
    if opts.b == 0 {
        return Err(Error::InvalidArgument("the number of bootstrap replicates must be at least 1".into()));
    }
    let (fit, _) = fit_npmle(sample, &opts.npmle).map_err(|e| match e {
        Error::InvalidArgument(_) => e,
        e => Error::OriginalFitFailed(Box::new(e)),
    })?;
    let grid = sample.distinct_xs();
    let f_n = npmle_cdf(&fit, sample)?.eval_many(&grid);
    let ecdf_on_grid = ecdf(sample).eval_many(&grid);
    let centre: Vec<f64> = f_n.iter().zip(&ecdf_on_grid).map(|(a, b)| a - b).collect();
    let d_n = centre.iter().map(|c| c.abs()).fold(0.0, f64::max);

    let work = |r: usize| run_replicate(sample, &grid, &centre, opts, r);
    let replicates: Vec<Replicate> = if opts.parallel {
        (0..opts.b).into_par_iter().filter_map(work).collect()
    } else {
        (0..opts.b).filter_map(work).collect()
    };
    if replicates.is_empty() {
        return Err(Error::AllReplicatesFailed { requested: opts.b });
    }
    Ok(BootstrapRun {
        d_n,
        alpha_n: fit.alpha_n,
        grid,
        ecdf_on_grid,
        replicates,
    })
}

impl BootstrapRun {
    fn report(&self, sample: &TruncatedSample, opts: &BootstrapOptions) -> BiasTestReport {
        let bootstrap_stats: Vec<f64> = self.replicates.iter().map(|r| r.stat).collect();
        let b_used = bootstrap_stats.len();
        let exceed = bootstrap_stats
            .iter()
            .filter(|&&s| s >= self.d_n - TIE_TOLERANCE)
            .count();
        BiasTestReport {
            n: sample.len(),
            d_n: self.d_n,
            p_value: exceed as f64 / b_used as f64,
            b_requested: opts.b,
            b_used,
            bootstrap_stats,
            alpha_n: self.alpha_n,
            seed: opts.seed,
        }
    }

    fn se_ratio(&self, n: usize) -> SeRatioCurve {
        let b = self.replicates.len();
        let mut out = SeRatioCurve {
            points: Vec::new(),
            ratio: Vec::new(),
            se_npmle: Vec::new(),
            se_ecdf: Vec::new(),
            b,
        };
        for (g, (&x, &fe)) in self.grid.iter().zip(&self.ecdf_on_grid).enumerate() {
            let se_ecdf = (fe * (1.0 - fe) / n as f64).sqrt();
            if !(se_ecdf > 0.0) {
                continue;
            }
            let mean = self.replicates.iter().map(|r| r.npmle_on_grid[g]).sum::<f64>() / b as f64;
            let ss: f64 = self
                .replicates
                .iter()
                .map(|r| (r.npmle_on_grid[g] - mean).powi(2))
                .sum();
            let se_npmle = if b > 1 { (ss / (b - 1) as f64).sqrt() } else { 0.0 };
            out.points.push(x);
            out.ratio.push(se_npmle / se_ecdf);
            out.se_npmle.push(se_npmle);
            out.se_ecdf.push(se_ecdf);
        }
        out
    }
}

/// Simple-bootstrap test of ignorable sampling bias.
///
/// Replicates whose NPMLE cannot be computed are skipped; the P-value is
/// `#{b : D_n^b >= D_n} / b_used`.
pub fn bootstrap_test(sample: &TruncatedSample, opts: &BootstrapOptions) -> Result<BiasTestReport> {
    Ok(run_bootstrap(sample, opts)?.report(sample, opts))
}

/// Bootstrap standard error of `F_n` relative to that of `F_n^*`. Points where
/// the empirical standard error vanishes are dropped.
pub fn se_ratio(sample: &TruncatedSample, opts: &BootstrapOptions) -> Result<SeRatioCurve> {
    Ok(run_bootstrap(sample, opts)?.se_ratio(sample.len()))
}

/// Test report and standard-error ratios from a single set of replicates.
pub fn bootstrap_analysis(
    sample: &TruncatedSample,
    opts: &BootstrapOptions,
) -> Result<(BiasTestReport, SeRatioCurve)> {
    let run = run_bootstrap(sample, opts)?;
    Ok((run.report(sample, opts), run.se_ratio(sample.len())))
}
