//! Doubly truncated observations and sample validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A target value `x` observed together with its truncation limits.
///
/// The triplet is only observable when `u <= x <= v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedObservation {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl TruncatedObservation {
    pub fn new(x: f64, u: f64, v: f64) -> Result<Self> {
        Self::checked(x, u, v, 0)
    }

    fn checked(x: f64, u: f64, v: f64, row: usize) -> Result<Self> {
        if !(x.is_finite() && u.is_finite() && v.is_finite()) {
            return Err(Error::NonFinite { row });
        }
        if u > x || x > v {
            return Err(Error::TruncationViolation { row, x, u, v });
        }
        Ok(Self { x, u, v })
    }

    /// Whether the truncation interval of `self` covers `t`.
    #[inline]
    pub fn covers(&self, t: f64) -> bool {
        self.u <= t && t <= self.v
    }
}

/// A raw input record; `None` marks a missing field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RawRecord {
    pub x: Option<f64>,
    pub u: Option<f64>,
    pub v: Option<f64>,
}

impl RawRecord {
    pub fn complete(x: f64, u: f64, v: f64) -> Self {
        Self {
            x: Some(x),
            u: Some(u),
            v: Some(v),
        }
    }
}

/// Non-empty list of valid observations, kept in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TruncatedObservation>", into = "Vec<TruncatedObservation>")]
pub struct TruncatedSample {
    observations: Vec<TruncatedObservation>,
}

impl TruncatedSample {
    pub fn new(observations: Vec<TruncatedObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (row, o) in observations.iter().enumerate() {
            TruncatedObservation::checked(o.x, o.u, o.v, row)?;
        }
        Ok(Self { observations })
    }

    /// Builds a sample from `(x, u, v)` triplets.
    pub fn from_triplets(triplets: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            triplets
                .iter()
                .map(|&(x, u, v)| TruncatedObservation { x, u, v })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[TruncatedObservation] {
        &self.observations
    }

    pub fn get(&self, i: usize) -> &TruncatedObservation {
        &self.observations[i]
    }

    pub fn xs(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.x).collect()
    }

    /// Sorted distinct target values.
    pub fn distinct_xs(&self) -> Vec<f64> {
        let mut xs = self.xs();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// Resample by row index; indices may repeat.
    pub fn resample(&self, indices: &[usize]) -> Self {
        assert!(!indices.is_empty(), "resample needs at least one index");
        Self {
            observations: indices.iter().map(|&i| self.observations[i]).collect(),
        }
    }

    /// True when every truncation interval covers every target value, i.e.
    /// the data carry no truncation information.
    pub fn is_untruncated(&self) -> bool {
        let lo = self.observations.iter().map(|o| o.x).fold(f64::INFINITY, f64::min);
        let hi = self
            .observations
            .iter()
            .map(|o| o.x)
            .fold(f64::NEG_INFINITY, f64::max);
        self.observations.iter().all(|o| o.u <= lo && hi <= o.v)
    }
}

impl TryFrom<Vec<TruncatedObservation>> for TruncatedSample {
    type Error = Error;

    fn try_from(v: Vec<TruncatedObservation>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TruncatedSample> for Vec<TruncatedObservation> {
    fn from(s: TruncatedSample) -> Self {
        s.observations
    }
}

/// Outcome of [`validate_sample`]: the surviving sample and the input
/// positions of records dropped for missingness.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSample {
    pub sample: TruncatedSample,
    pub dropped_rows: Vec<usize>,
}

impl ValidatedSample {
    pub fn dropped(&self) -> usize {
        self.dropped_rows.len()
    }
}

/// Drops incomplete records and checks the rest.
///
/// A complete record that violates `u <= x <= v` aborts validation: that is
/// corrupted data, not missingness.
pub fn validate_sample(rows: &[RawRecord]) -> Result<ValidatedSample> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut observations = Vec::with_capacity(rows.len());
    let mut dropped_rows = Vec::new();
    for (row, r) in rows.iter().enumerate() {
        match (r.x, r.u, r.v) {
            (Some(x), Some(u), Some(v)) => {
                observations.push(TruncatedObservation::checked(x, u, v, row)?)
            }
            _ => dropped_rows.push(row),
        }
    }
    if observations.is_empty() {
        return Err(Error::AllRowsInvalid {
            dropped: dropped_rows.len(),
        });
    }
    Ok(ValidatedSample {
        sample: TruncatedSample { observations },
        dropped_rows,
    })
}
