//! Serialized reports and long-format plot data.

use serde::{Deserialize, Serialize};

use dtbias::estimators::FitStatus;
use dtbias::{BiasTestReport, McResult, McScenario, Model, SeRatioCurve};

/// One observation of a fitted dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedRow {
    pub x: f64,
    pub u: f64,
    pub v: f64,
    pub f_weight: f64,
    pub k_weight: f64,
    pub g: f64,
}

/// Estimates at a distinct target value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub npmle: f64,
    pub ecdf: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub dropped: usize,
    pub dropped_rows: Vec<usize>,
    pub status: FitStatus,
    pub iterations: usize,
    pub final_delta: f64,
    pub degenerate_indices: Vec<usize>,
    pub alpha_n: f64,
    pub truncation_rate: f64,
    pub d_n: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rows: Vec<FittedRow>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub dropped: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub test: BiasTestReport,
    pub se_ratio: SeRatioCurve,
}

/// A power-study cell; `result` is absent when every trial was discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub scenario: McScenario,
    pub result: Option<McResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub tol: f64,
    pub max_iter: usize,
    pub cells: Vec<SimCell>,
}

/// Long-format `series,x,value` rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    rows: Vec<(String, f64, f64)>,
}

impl PlotData {
    pub fn push(&mut self, series: impl Into<String>, x: f64, value: f64) {
        self.rows.push((series.into(), x, value));
    }

    pub fn rows(&self) -> &[(String, f64, f64)] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["series", "x", "value"]).expect("in-memory write");
        for (s, x, v) in &self.rows {
            w.write_record([s.as_str(), &x.to_string(), &v.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

impl FitReport {
    pub fn plot_data(&self) -> PlotData {
        let mut p = PlotData::default();
        for c in &self.curve {
            p.push("F_n", c.x, c.npmle);
            p.push("F_n_star", c.x, c.ecdf);
            p.push("F_n_minus_F_n_star", c.x, c.npmle - c.ecdf);
            p.push("G_n", c.x, c.g);
            p.push("alpha_n", c.x, self.alpha_n);
            p.push("G_n_minus_alpha_n", c.x, c.g - self.alpha_n);
        }
        p
    }

    /// Per-observation table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

#[derive(Serialize)]
struct TestSummaryRow {
    n: usize,
    dropped: usize,
    d_n: f64,
    p_value: f64,
    b_requested: usize,
    b_used: usize,
    alpha_n: f64,
    seed: u64,
    max_se_ratio: f64,
}

impl TestReport {
    pub fn plot_data(&self) -> PlotData {
        let mut p = PlotData::default();
        for (x, r) in self.se_ratio.points.iter().zip(&self.se_ratio.ratio) {
            p.push("se_ratio", *x, *r);
        }
        for (x, s) in self.se_ratio.points.iter().zip(&self.se_ratio.se_npmle) {
            p.push("se_npmle", *x, *s);
        }
        for (x, s) in self.se_ratio.points.iter().zip(&self.se_ratio.se_ecdf) {
            p.push("se_ecdf", *x, *s);
        }
        p
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(TestSummaryRow {
            n: self.n,
            dropped: self.dropped,
            d_n: self.test.d_n,
            p_value: self.test.p_value,
            b_requested: self.test.b_requested,
            b_used: self.test.b_used,
            alpha_n: self.test.alpha_n,
            seed: self.test.seed,
            max_se_ratio: self.se_ratio.max_ratio(),
        })
        .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

#[derive(Serialize)]
struct SimRow<'a> {
    model: Model,
    rho: f64,
    sigma: f64,
    n: usize,
    target: String,
    trials: usize,
    b: usize,
    seed: u64,
    gamma: f64,
    rejection_rate: Option<f64>,
    trials_used: usize,
    trials_discarded: usize,
    mean_b_used: Option<f64>,
    status: &'a str,
}

impl SimReport {
    /// One row per (cell, significance level).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for cell in &self.cells {
            let sc = &cell.scenario;
            for (gi, &gamma) in sc.gammas.iter().enumerate() {
                let row = SimRow {
                    model: sc.model,
                    rho: sc.rho,
                    sigma: sc.sigma,
                    n: sc.n,
                    target: sc.target.to_string(),
                    trials: sc.trials,
                    b: sc.b,
                    seed: sc.seed,
                    gamma,
                    rejection_rate: cell.result.as_ref().map(|r| r.rejection_rate[gi]),
                    trials_used: cell.result.as_ref().map_or(0, |r| r.trials_used),
                    trials_discarded: cell.result.as_ref().map_or(sc.trials, |r| r.trials_discarded),
                    mean_b_used: cell.result.as_ref().map(|r| r.mean_b_used),
                    status: if cell.result.is_some() { "ok" } else { "failed" },
                };
                w.serialize(row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

/// Analytic sampling-bias curves as plot data, one series per
/// `(model, rho, sigma)`.
pub fn sampling_bias_plot(points: usize) -> PlotData {
    let mut p = PlotData::default();
    for (model, rho, sigma, x, g) in dtbias::simulate::sampling_bias_curves(points) {
        p.push(format!("G_{model}_rho={rho}_sigma={sigma}"), x, g);
    }
    p
}
