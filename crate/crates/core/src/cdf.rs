//! Step distribution functions with finite support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance for the total weight.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// A right-continuous step CDF putting `weights[i]` at `points[i]`.
///
/// Points are strictly increasing and the weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCdf {
    points: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedCdf {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights at points `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn eval_many(&self, ts: &[f64]) -> Vec<f64> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// `F(t)` at each support point.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
}

// Prefix sums of raw weights divided by the total: integer counts stay exact,
// and the last entry is exactly one.
fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            (acc / total).min(1.0)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Sorts `points`, merges duplicates by summing their weights and
/// normalizes the weights to one.
pub fn make_weighted_cdf(points: &[f64], weights: &[f64]) -> Result<WeightedCdf> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch {
            points: points.len(),
            weights: weights.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (index, &w) in weights.iter().enumerate() {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::NegativeWeight { index, value: w });
        }
    }
    if let Some(row) = points.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite { row });
    }

    let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged_points: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut raw: Vec<f64> = Vec::with_capacity(pairs.len());
    for (p, w) in pairs {
        match merged_points.last() {
            Some(&last) if last == p => *raw.last_mut().unwrap() += w,
            _ => {
                merged_points.push(p);
                raw.push(w);
            }
        }
    }

    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let cumulative = cumulative(&raw);
    let weights = raw.iter().map(|w| w / total).collect();
    Ok(WeightedCdf {
        points: merged_points,
        weights,
        cumulative,
    })
}

/// `max_t |a(t) - b(t)|` over the given evaluation points.
pub fn sup_distance(a: &WeightedCdf, b: &WeightedCdf, eval_points: &[f64]) -> Result<f64> {
    if eval_points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(eval_points
        .iter()
        .map(|&t| (a.eval(t) - b.eval(t)).abs())
        .fold(0.0, f64::max))
}
