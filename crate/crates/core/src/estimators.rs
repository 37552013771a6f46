//! The empirical CDF and the Efron-Petrosian NPMLE.
//!
//! The NPMLE maximizes the full likelihood of the observed triplets over the
//! target distribution `F` (masses `f_i` at the `X_i`) and the joint
//! truncation distribution `K` (masses `k_j` at the `(U_j, V_j)`):
//!
//! ```text
//! L(f, k) = prod_i f_i * prod_j k_j / (sum_i sum_j f_i k_j J[i][j])^n,
//! J[i][j] = 1{U_j <= X_i <= V_j}
//! ```
//!
//! It is computed by alternating self-consistency updates. Given `k`, the
//! optimal `f` is proportional to `1 / G(X_i)` with `G(X_i) = sum_j J[i][j] k_j`;
//! given `f`, the optimal `k` is proportional to `1 / sum_i J[i][j] f_i`. Each
//! half-step is an exact coordinate maximization, so the likelihood never
//! decreases along the iteration.
//!
//! With the `X_i` sorted, the rows covered by a truncation interval form a
//! contiguous block, so both half-steps run in linear time through prefix
//! sums.

use serde::{Deserialize, Serialize};

use crate::cdf::{make_weighted_cdf, WeightedCdf};
use crate::error::{Error, Result};
use crate::sample::TruncatedSample;

/// Coverage below this value is treated as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpmleOptions {
    /// Stop once the largest absolute change of any weight is `<= tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NpmleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl NpmleOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Joint NPMLE of the target and truncation distributions.
///
/// All vectors are indexed by the row of the sample the fit was computed
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmleFit {
    /// Mass of `F_n` at each `X_i`.
    pub f_weights: Vec<f64>,
    /// Mass of `K_n` at each `(U_j, V_j)`.
    pub k_weights: Vec<f64>,
    /// `G_n(X_i)`.
    pub g_at_x: Vec<f64>,
    pub alpha_n: f64,
    pub iterations: usize,
    pub converged: bool,
    pub min_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIterationsExceeded,
    DegenerateWeights,
    /// The coverage graph is disconnected: mass can be moved between
    /// components without changing the likelihood.
    NonUnique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub status: FitStatus,
    pub final_delta: f64,
    /// Rows whose coverage fell below [`DEGENERACY_FLOOR`], or the first
    /// row of each extra component for [`FitStatus::NonUnique`].
    pub degenerate_indices: Vec<usize>,
}

impl FitDiagnostics {
    fn into_error(self, iterations: usize) -> Error {
        match self.status {
            FitStatus::Converged => unreachable!(),
            FitStatus::MaxIterationsExceeded => Error::MaxIterationsExceeded {
                iterations,
                final_delta: self.final_delta,
            },
            FitStatus::DegenerateWeights => Error::DegenerateWeights {
                iteration: iterations,
                indices: self.degenerate_indices,
            },
            FitStatus::NonUnique => Error::NonUnique {
                components: self.degenerate_indices.len() + 1,
            },
        }
    }
}

/// Empirical CDF of the `X_i`: mass `1/n` at each observation.
pub fn ecdf(sample: &TruncatedSample) -> WeightedCdf {
    let xs = sample.xs();
    make_weighted_cdf(&xs, &vec![1.0; xs.len()]).expect("validated sample")
}

/// Sampling probability `G_n` on the sorted distinct `X_i`, with `alpha_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingCurve {
    pub eval_points: Vec<f64>,
    pub values: Vec<f64>,
    pub alpha: f64,
}

/// Interval structure of a sample: the sorting permutation of the `X_i` and,
/// for each row `j`, the half-open block `[lo_j, hi_j)` of sorted positions
/// covered by `[U_j, V_j]`.
#[derive(Debug, Clone)]
pub(crate) struct Coverage {
    order: Vec<usize>,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Coverage {
    pub(crate) fn new(sample: &TruncatedSample) -> Self {
        let obs = sample.observations();
        let mut order: Vec<usize> = (0..obs.len()).collect();
        order.sort_by(|&a, &b| obs[a].x.total_cmp(&obs[b].x));
        let sorted: Vec<f64> = order.iter().map(|&i| obs[i].x).collect();
        let lo = obs.iter().map(|o| sorted.partition_point(|&x| x < o.u)).collect();
        let hi = obs.iter().map(|o| sorted.partition_point(|&x| x <= o.v)).collect();
        Self { order, lo, hi }
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    /// Rows opening a new connected component of the coverage graph (row `i`
    /// linked to pair `j` when `U_j <= X_i <= V_j`), in sorted order. Empty
    /// when the graph is connected.
    ///
    /// Consecutive sorted positions `p` and `p + 1` are linked exactly when
    /// some block contains both, so a component boundary is an unbridged gap.
    pub(crate) fn component_starts(&self) -> Vec<usize> {
        let n = self.len();
        if n < 2 {
            return Vec::new();
        }
        let mut bridges = vec![0i64; n];
        for (&lo, &hi) in self.lo.iter().zip(&self.hi) {
            if hi >= lo + 2 {
                bridges[lo] += 1;
                bridges[hi - 1] -= 1;
            }
        }
        let mut acc = 0;
        let mut starts = Vec::new();
        for gap in 0..n - 1 {
            acc += bridges[gap];
            if acc == 0 {
                starts.push(self.order[gap + 1]);
            }
        }
        starts
    }

    /// `g[p] = sum_j k_j 1{lo_j <= p < hi_j}` for sorted positions `p`.
    fn coverage_of_x(&self, k: &[f64], diff: &mut [f64], g_sorted: &mut [f64]) {
        diff.iter_mut().for_each(|d| *d = 0.0);
        for (j, &kj) in k.iter().enumerate() {
            diff[self.lo[j]] += kj;
            diff[self.hi[j]] -= kj;
        }
        let mut acc = 0.0;
        for (g, d) in g_sorted.iter_mut().zip(diff.iter()) {
            acc += d;
            *g = acc;
        }
    }

    /// `h_j = sum_i f_i 1{U_j <= X_i <= V_j}` from `f` in sorted order.
    fn coverage_of_pairs(&self, f_sorted: &[f64], prefix: &mut [f64], h: &mut [f64]) {
        prefix[0] = 0.0;
        for (p, &fp) in f_sorted.iter().enumerate() {
            prefix[p + 1] = prefix[p] + fp;
        }
        for (j, hj) in h.iter_mut().enumerate() {
            *hj = prefix[self.hi[j]] - prefix[self.lo[j]];
        }
    }
}

/// State passed to an iteration observer after each full update.
pub struct IterationState<'a> {
    pub iteration: usize,
    /// Per-row `F` masses.
    pub f_weights: &'a [f64],
    pub k_weights: &'a [f64],
    pub delta: f64,
}

// Normalized inverses; returns false when any entry is under the floor.
fn inverse_normalize(values: &[f64], out: &mut [f64]) -> bool {
    let mut total = 0.0;
    let mut ok = true;
    for (o, &v) in out.iter_mut().zip(values) {
        if v < DEGENERACY_FLOOR {
            ok = false;
        }
        *o = 1.0 / v;
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    ok
}

/// Runs the self-consistency iteration and always returns the last iterate
/// together with its diagnostics; `fit.converged` tells whether it is usable.
pub fn fit_npmle_unchecked(
    sample: &TruncatedSample,
    opts: &NpmleOptions,
) -> Result<(NpmleFit, FitDiagnostics)> {
    fit_npmle_observed(sample, opts, |_| {})
}

/// [`fit_npmle_unchecked`] with a callback invoked after every iteration.
pub fn fit_npmle_observed<F>(
    sample: &TruncatedSample,
    opts: &NpmleOptions,
    mut observer: F,
) -> Result<(NpmleFit, FitDiagnostics)>
where
    F: FnMut(&IterationState<'_>),
{
    opts.validate()?;
    let cov = Coverage::new(sample);
    let n = cov.len();
    let uniform = 1.0 / n as f64;

    // f is kept in sorted order, k in row order.
    let mut f_sorted = vec![uniform; n];
    let mut k = vec![uniform; n];
    let mut f_next = vec![0.0; n];
    let mut k_next = vec![0.0; n];
    let mut g_sorted = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut scratch = vec![0.0; n + 1];
    let mut f_rows = vec![0.0; n];

    let mut status = FitStatus::MaxIterationsExceeded;
    let mut delta = f64::INFINITY;
    let mut degenerate = Vec::new();
    let mut iterations = 0;

    let starts = cov.component_starts();
    if !starts.is_empty() {
        status = FitStatus::NonUnique;
        degenerate = starts;
    }

    while status != FitStatus::NonUnique && iterations < opts.max_iter {
        iterations += 1;

        cov.coverage_of_x(&k, &mut scratch, &mut g_sorted);
        if !inverse_normalize(&g_sorted, &mut f_next) {
            degenerate = (0..n)
                .filter(|&p| g_sorted[p] < DEGENERACY_FLOOR)
                .map(|p| cov.order[p])
                .collect();
            status = FitStatus::DegenerateWeights;
            break;
        }

        cov.coverage_of_pairs(&f_next, &mut scratch, &mut h);
        if !inverse_normalize(&h, &mut k_next) {
            degenerate = (0..n).filter(|&j| h[j] < DEGENERACY_FLOOR).collect();
            status = FitStatus::DegenerateWeights;
            break;
        }

        delta = f_sorted
            .iter()
            .zip(&f_next)
            .chain(k.iter().zip(&k_next))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut f_sorted, &mut f_next);
        std::mem::swap(&mut k, &mut k_next);

        for (p, &row) in cov.order.iter().enumerate() {
            f_rows[row] = f_sorted[p];
        }
        observer(&IterationState {
            iteration: iterations,
            f_weights: &f_rows,
            k_weights: &k,
            delta,
        });

        if delta <= opts.tol {
            status = FitStatus::Converged;
            break;
        }
    }

    // Recompute G_n and F_n from the final k so that the representation
    // f_i = (alpha_n / n) / G_n(X_i) holds exactly.
    cov.coverage_of_x(&k, &mut scratch, &mut g_sorted);
    let mut g_at_x = vec![0.0; n];
    for (p, &row) in cov.order.iter().enumerate() {
        g_at_x[row] = g_sorted[p];
    }
    let min_g = g_at_x.iter().copied().fold(f64::INFINITY, f64::min);
    if status == FitStatus::Converged && min_g < DEGENERACY_FLOOR {
        status = FitStatus::DegenerateWeights;
        degenerate = (0..n).filter(|&i| g_at_x[i] < DEGENERACY_FLOOR).collect();
    }
    let inv_sum: f64 = g_at_x.iter().map(|g| 1.0 / g).sum();
    let f_weights: Vec<f64> = g_at_x.iter().map(|g| (1.0 / g) / inv_sum).collect();
    let alpha_n = n as f64 / inv_sum;

    let fit = NpmleFit {
        f_weights,
        k_weights: k,
        g_at_x,
        alpha_n,
        iterations,
        converged: status == FitStatus::Converged,
        min_g,
    };
    let diagnostics = FitDiagnostics {
        status,
        final_delta: delta,
        degenerate_indices: degenerate,
    };
    Ok((fit, diagnostics))
}

/// Efron-Petrosian NPMLE by self-consistency iteration, starting from
/// uniform truncation weights.
///
/// Fails with [`Error::NonUnique`] when the coverage graph is disconnected,
/// with [`Error::DegenerateWeights`] when a coverage drops below
/// [`DEGENERACY_FLOOR`] and with [`Error::MaxIterationsExceeded`] when the
/// tolerance is not reached. All three signal an NPMLE that cannot be
/// computed reliably (non-existence or non-uniqueness).
pub fn fit_npmle(sample: &TruncatedSample, opts: &NpmleOptions) -> Result<(NpmleFit, FitDiagnostics)> {
    let (fit, diag) = fit_npmle_unchecked(sample, opts)?;
    if diag.status == FitStatus::Converged {
        Ok((fit, diag))
    } else {
        Err(diag.into_error(fit.iterations))
    }
}

/// Log of the full likelihood at per-row weights `f` and `k`, which need not
/// be normalized.
pub fn log_likelihood(sample: &TruncatedSample, f: &[f64], k: &[f64]) -> f64 {
    let obs = sample.observations();
    let n = obs.len() as f64;
    let mut alpha = 0.0;
    for (o, fi) in obs.iter().zip(f) {
        let g: f64 = obs.iter().zip(k).filter(|(t, _)| t.covers(o.x)).map(|(_, kj)| kj).sum();
        alpha += fi * g;
    }
    f.iter().map(|v| v.ln()).sum::<f64>() + k.iter().map(|v| v.ln()).sum::<f64>() - n * alpha.ln()
}

fn require_converged(fit: &NpmleFit, sample: &TruncatedSample) -> Result<()> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if fit.f_weights.len() != sample.len() {
        return Err(Error::InvalidArgument(format!(
            "fit has {} weights but the sample has {} rows",
            fit.f_weights.len(),
            sample.len()
        )));
    }
    Ok(())
}

/// `F_n` as a step CDF.
pub fn npmle_cdf(fit: &NpmleFit, sample: &TruncatedSample) -> Result<WeightedCdf> {
    require_converged(fit, sample)?;
    make_weighted_cdf(&sample.xs(), &fit.f_weights)
}

/// `G_n` on the sorted distinct `X_i`.
pub fn sampling_curve(fit: &NpmleFit, sample: &TruncatedSample) -> Result<SamplingCurve> {
    require_converged(fit, sample)?;
    let mut pairs: Vec<(f64, f64)> = sample.xs().into_iter().zip(fit.g_at_x.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    let (eval_points, values) = pairs.into_iter().unzip();
    Ok(SamplingCurve {
        eval_points,
        values,
        alpha: fit.alpha_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn untruncated() -> TruncatedSample {
        TruncatedSample::from_triplets(&[
            (3.0, -1.0, 10.0),
            (1.0, 0.0, 9.0),
            (2.0, -5.0, 4.0),
            (4.0, 0.5, 5.0),
        ])
        .unwrap()
    }

    fn toy() -> TruncatedSample {
        TruncatedSample::from_triplets(&[(1.0, 0.0, 1.5), (2.0, 1.5, 2.5), (3.0, 2.5, 3.5)]).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let s = TruncatedSample::from_triplets(&[
            (1.0, 0.0, 5.0),
            (2.0, 0.0, 5.0),
            (3.0, 0.0, 5.0),
            (4.0, 0.0, 5.0),
        ])
        .unwrap();
        assert_eq!(ecdf(&s).eval(2.5), 0.5);
        let one = TruncatedSample::from_triplets(&[(7.0, 7.0, 7.0)]).unwrap();
        assert_eq!(ecdf(&one).eval(7.0), 1.0);
    }

    #[test]
    fn untruncated_is_uniform_in_one_iteration() {
        let s = untruncated();
        let (fit, diag) = fit_npmle(&s, &NpmleOptions::default()).unwrap();
        assert_eq!(diag.status, FitStatus::Converged);
        assert_eq!(fit.iterations, 1);
        for (f, g) in fit.f_weights.iter().zip(&fit.g_at_x) {
            assert!((f - 0.25).abs() < 1e-15);
            assert!((g - 1.0).abs() < 1e-15);
        }
        assert!((fit.alpha_n - 1.0).abs() < 1e-15);

        let curve = sampling_curve(&fit, &s).unwrap();
        assert_eq!(curve.eval_points, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(curve.values.iter().all(|v| (v - 1.0).abs() < 1e-15));

        let a = npmle_cdf(&fit, &s).unwrap();
        let b = ecdf(&s);
        for t in [0.0, 1.0, 2.5, 4.0] {
            assert!((a.eval(t) - b.eval(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn disjoint_intervals_are_not_unique() {
        // each interval only covers its own X: J is the identity matrix and
        // the likelihood does not depend on f
        let s = toy();
        let err = fit_npmle(&s, &NpmleOptions::default()).unwrap_err();
        assert_eq!(err, Error::NonUnique { components: 3 });
        let (_, diag) = fit_npmle_unchecked(&s, &NpmleOptions::default()).unwrap();
        assert_eq!(diag.status, FitStatus::NonUnique);
        assert_eq!(diag.degenerate_indices, vec![1, 2]);
    }

    #[test]
    fn component_detection() {
        // {0.1, 0.2} and {0.8, 0.9} linked internally, nothing spans the gap
        let s = TruncatedSample::from_triplets(&[
            (0.9, 0.7, 1.0),
            (0.1, 0.0, 0.3),
            (0.8, 0.75, 0.95),
            (0.2, 0.05, 0.25),
        ])
        .unwrap();
        assert_eq!(Coverage::new(&s).component_starts(), vec![2]);
        // one wide interval bridges everything
        let s = TruncatedSample::from_triplets(&[
            (0.9, 0.7, 1.0),
            (0.1, 0.0, 0.3),
            (0.8, 0.0, 0.95),
            (0.2, 0.05, 0.25),
        ])
        .unwrap();
        assert!(Coverage::new(&s).component_starts().is_empty());
        // ties are always linked
        let s = TruncatedSample::from_triplets(&[(0.5, 0.5, 0.5), (0.5, 0.5, 0.5)]).unwrap();
        assert!(Coverage::new(&s).component_starts().is_empty());
    }

    #[test]
    fn representation_and_closure_hold() {
        let s = TruncatedSample::from_triplets(&[
            (0.2, 0.0, 0.5),
            (0.4, 0.1, 0.9),
            (0.5, 0.3, 1.0),
            (0.9, 0.45, 1.2),
            (0.7, 0.6, 1.1),
        ])
        .unwrap();
        let (fit, _) = fit_npmle(&s, &NpmleOptions::default()).unwrap();
        let sum_f: f64 = fit.f_weights.iter().sum();
        let sum_k: f64 = fit.k_weights.iter().sum();
        assert!((sum_f - 1.0).abs() < 1e-12);
        assert!((sum_k - 1.0).abs() < 1e-12);
        let alpha_int: f64 = fit.f_weights.iter().zip(&fit.g_at_x).map(|(f, g)| f * g).sum();
        assert!((alpha_int - fit.alpha_n).abs() < 1e-8);
        let inv: f64 = fit.g_at_x.iter().map(|g| 1.0 / g).sum::<f64>() / 5.0;
        assert!((fit.alpha_n * inv - 1.0).abs() < 1e-8);
        // g recomputed by brute force from k
        for (i, o) in s.observations().iter().enumerate() {
            let g: f64 = s
                .observations()
                .iter()
                .zip(&fit.k_weights)
                .filter(|(t, _)| t.covers(o.x))
                .map(|(_, k)| k)
                .sum();
            assert!((g - fit.g_at_x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn not_converged_fit_is_rejected_downstream() {
        let s = TruncatedSample::from_triplets(&[
            (0.2, 0.0, 0.5),
            (0.4, 0.1, 0.9),
            (0.9, 0.45, 1.2),
        ])
        .unwrap();
        let opts = NpmleOptions { tol: 1e-15, max_iter: 2 };
        let err = fit_npmle(&s, &opts).unwrap_err();
        assert!(matches!(err, Error::MaxIterationsExceeded { iterations: 2, .. }));
        let (fit, diag) = fit_npmle_unchecked(&s, &opts).unwrap();
        assert_eq!(diag.status, FitStatus::MaxIterationsExceeded);
        assert_eq!(npmle_cdf(&fit, &s).unwrap_err(), Error::NotConverged);
        assert_eq!(sampling_curve(&fit, &s).unwrap_err(), Error::NotConverged);
    }

    #[test]
    fn bad_options() {
        let s = toy();
        let opts = NpmleOptions { tol: 0.0, max_iter: 10 };
        assert!(matches!(fit_npmle(&s, &opts), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn ties_share_weights() {
        let s = TruncatedSample::from_triplets(&[
            (0.5, 0.0, 0.8),
            (0.5, 0.2, 1.0),
            (0.9, 0.3, 1.2),
            (0.1, 0.0, 0.6),
        ])
        .unwrap();
        let (fit, _) = fit_npmle(&s, &NpmleOptions::default()).unwrap();
        assert_eq!(fit.f_weights[0], fit.f_weights[1]);
        let cdf = npmle_cdf(&fit, &s).unwrap();
        assert_eq!(cdf.points(), &[0.1, 0.5, 0.9]);
    }
}
