// Invariant checks shared by the standalone suite and the acceptance target.
// Each returns a description of the first violation.

use dtbias::estimators::{fit_npmle_observed, log_likelihood};
use dtbias::simulate::{draw_truncated_sample, TruncationModel};
use dtbias::{
    bootstrap_analysis, fit_npmle, npmle_cdf, run_monte_carlo, BootstrapOptions, McOptions, McScenario, Model,
    NpmleOptions, TargetLaw, TruncatedSample,
};

pub type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn simulated(model: Model, rho: f64, sigma: f64, n: usize, seed: u64) -> TruncatedSample {
    let trunc = TruncationModel::new(model, rho, sigma).unwrap();
    draw_truncated_sample(&TargetLaw::Uniform01, &trunc, n, &mut dtbias::rng::substream(seed, 0))
}

/// First simulated sample from `seed` on whose NPMLE converges.
pub fn converged_sample(n: usize, seed: u64) -> TruncatedSample {
    (seed..)
        .map(|s| simulated(Model::M1, 2.0, 1.0, n, s))
        .find(|s| fit_npmle(s, &NpmleOptions::default()).is_ok())
        .unwrap()
}

pub fn cdf_monotone_normalized(s: &TruncatedSample) -> Check {
    let (fit, _) = fit_npmle(s, &NpmleOptions::default()).map_err(|e| e.to_string())?;
    let cdf = npmle_cdf(&fit, s).map_err(|e| e.to_string())?;
    let c = cdf.cumulative();
    ensure(c.windows(2).all(|w| w[0] <= w[1]), || "cdf decreases".into())?;
    ensure(*c.last().unwrap() == 1.0, || format!("cdf ends at {}", c.last().unwrap()))?;
    ensure(cdf.eval(f64::MIN) == 0.0 && cdf.eval(f64::MAX) == 1.0, || "cdf limits".into())?;
    ensure(cdf.weights().iter().all(|&w| w >= 0.0), || "negative mass".into())
}

/// One more dense (a)+(b) sweep moves no weight by more than `tol`.
pub fn fixed_point(s: &TruncatedSample) -> Check {
    let opts = NpmleOptions::default();
    let (fit, _) = fit_npmle(s, &opts).map_err(|e| e.to_string())?;
    let j = super::coverage_matrix(s);
    let n = s.len();
    let g: Vec<f64> = (0..n).map(|i| (0..n).filter(|&k| j[i][k]).map(|k| fit.k_weights[k]).sum()).collect();
    let inv: f64 = g.iter().map(|v| 1.0 / v).sum();
    let f: Vec<f64> = g.iter().map(|v| 1.0 / v / inv).collect();
    let h: Vec<f64> = (0..n).map(|k| (0..n).filter(|&i| j[i][k]).map(|i| f[i]).sum()).collect();
    let inv: f64 = h.iter().map(|v| 1.0 / v).sum();
    let k: Vec<f64> = h.iter().map(|v| 1.0 / v / inv).collect();
    for i in 0..n {
        ensure((f[i] - fit.f_weights[i]).abs() <= opts.tol, || format!("f[{i}] moved"))?;
        ensure((k[i] - fit.k_weights[i]).abs() <= opts.tol, || format!("k[{i}] moved"))?;
        ensure((g[i] - fit.g_at_x[i]).abs() < 1e-12, || format!("g[{i}] inconsistent"))?;
    }
    Ok(())
}

pub fn likelihood_ascent(s: &TruncatedSample) -> Check {
    let mut trace = Vec::new();
    fit_npmle_observed(s, &NpmleOptions::default(), |st| {
        trace.push(log_likelihood(s, st.f_weights, st.k_weights));
    })
    .map_err(|e| e.to_string())?;
    match trace.windows(2).position(|w| w[1] < w[0] - 1e-10) {
        Some(i) => Err(format!("log-likelihood fell at iteration {}: {} -> {}", i + 2, trace[i], trace[i + 1])),
        None => Ok(()),
    }
}

pub fn closure(s: &TruncatedSample) -> Check {
    let (fit, _) = fit_npmle(s, &NpmleOptions::default()).map_err(|e| e.to_string())?;
    let n = s.len() as f64;
    let fsum: f64 = fit.f_weights.iter().sum();
    ensure((fsum - 1.0).abs() < 1e-8, || format!("sum f = {fsum}"))?;
    let inv: f64 = fit.g_at_x.iter().map(|g| 1.0 / g).sum();
    let c = fit.alpha_n * inv / n;
    ensure((c - 1.0).abs() < 1e-8, || format!("alpha_n * mean(1/g) = {c}"))?;
    ensure(fit.alpha_n > 0.0 && fit.alpha_n <= 1.0, || format!("alpha_n = {}", fit.alpha_n))
}

/// Repeated runs agree and serial equals parallel, for the bootstrap and the
/// Monte Carlo driver.
pub fn determinism(s: &TruncatedSample) -> Check {
    let mut opts = BootstrapOptions::new(60, 99);
    let a = bootstrap_analysis(s, &opts).map_err(|e| e.to_string())?;
    let b = bootstrap_analysis(s, &opts).map_err(|e| e.to_string())?;
    ensure(a == b, || "bootstrap differs between runs".into())?;
    opts.parallel = false;
    let c = bootstrap_analysis(s, &opts).map_err(|e| e.to_string())?;
    ensure(a == c, || "bootstrap serial differs from parallel".into())?;

    let mut sc = McScenario::new(Model::M1, 6.0, 1.0, 60);
    sc.trials = 12;
    sc.b = 40;
    sc.seed = 5;
    let par = run_monte_carlo(&sc, &McOptions::default()).map_err(|e| e.to_string())?;
    let again = run_monte_carlo(&sc, &McOptions::default()).map_err(|e| e.to_string())?;
    let ser = run_monte_carlo(
        &sc,
        &McOptions {
            parallel: false,
            ..McOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(par == again, || "Monte Carlo differs between runs".into())?;
    ensure(par == ser, || "Monte Carlo serial differs from parallel".into())
}
