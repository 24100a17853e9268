use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Significant digits kept in every report value.
pub const REPORT_DIGITS: usize = 12;

/// Rounds to [`REPORT_DIGITS`] significant digits; non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

/// Empirical sum against its main-term oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub label: String,
    #[serde(rename = "X")]
    pub x: f64,
    pub k: f64,
    pub empirical: f64,
    pub oracle: f64,
    /// `|empirical / oracle - 1|`, absent when the oracle vanishes.
    pub rel_err: Option<f64>,
    pub runtime_s: f64,
    /// Auxiliary quantities (normalizations, omitted terms, window sizes).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl MomentReport {
    pub fn new(
        label: impl Into<String>,
        x: f64,
        k: f64,
        empirical: f64,
        oracle: f64,
        runtime_s: f64,
    ) -> Self {
        let rel_err = (oracle != 0.0).then(|| round_sig((empirical / oracle - 1.0).abs()));
        Self {
            label: label.into(),
            x: round_sig(x),
            k: round_sig(k),
            empirical: round_sig(empirical),
            oracle: round_sig(oracle),
            rel_err,
            runtime_s: round_sig(runtime_s),
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), round_sig(value));
        self
    }

    /// `empirical / oracle`, or `None` when the oracle vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.oracle != 0.0).then(|| self.empirical / self.oracle)
    }
}

/// Empirical tail frequencies of a normalized statistic against Gaussian tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub label: String,
    #[serde(rename = "X")]
    pub x: f64,
    pub adjust: bool,
    pub v_grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub gaussian_tail: Vec<f64>,
    pub sample_size: usize,
    /// Members whose central value vanished (statistic set to `-inf`).
    pub zero_count: usize,
    pub runtime_s: f64,
}

impl DistributionReport {
    pub fn zero_share(&self) -> f64 {
        if self.sample_size == 0 {
            0.0
        } else {
            self.zero_count as f64 / self.sample_size as f64
        }
    }

    /// Frequency at `v`, if `v` is on the grid.
    pub fn tail_at(&self, v: f64) -> Option<f64> {
        self.v_grid
            .iter()
            .position(|&g| g == v)
            .map(|i| self.empirical_tail[i])
    }
}
