use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Five-number summary with Tukey outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Values beyond 1.5·IQR from the quartiles.
    pub outliers: Vec<f64>,
}

impl BoxStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Whiskers: the most extreme values inside the outlier fences.
    pub fn whiskers(&self, values: &[f64]) -> (f64, f64) {
        let (lo, hi) = self.fences();
        let inside = values.iter().copied().filter(|v| *v >= lo && *v <= hi);
        let low = inside.clone().fold(f64::INFINITY, f64::min);
        let high = inside.fold(f64::NEG_INFINITY, f64::max);
        (low.min(self.q1), high.max(self.q3))
    }

    pub fn fences(&self) -> (f64, f64) {
        (self.q1 - 1.5 * self.iqr(), self.q3 + 1.5 * self.iqr())
    }
}

/// Quantile of ascending `sorted` data by linear interpolation between
/// order statistics (`h = (n − 1)·q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no values to summarize".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in summarized values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut stats = BoxStats {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        outliers: Vec::new(),
    };
    let (lo, hi) = stats.fences();
    stats.outliers = sorted.into_iter().filter(|v| *v < lo || *v > hi).collect();
    Ok(stats)
}
