use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps decision values to confidences.
///
/// `low` and `high` are the 1st and 99th percentiles of the calibration
/// scores. Score 0 maps to 0.5; positive scores rise linearly to 1 at the
/// positive scale and negative scores fall linearly to 0 at the negative
/// scale, so the 0.5 slice reproduces the sign of the decision value. A side
/// with no observed mass borrows the other side's scale, or 1 if neither has
/// any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub low: f64,
    pub high: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration { low: -1.0, high: 1.0 }
    }
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

impl Calibration {
    pub fn fit(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::arg("no scores to calibrate on"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("non-finite decision value".into()));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Calibration {
            low: percentile(&sorted, 1.0),
            high: percentile(&sorted, 99.0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.high.is_finite()) || self.low > self.high {
            return Err(Error::Config(format!(
                "bad calibration range [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    fn scales(&self) -> (f64, f64) {
        let pos = (self.high > 0.0).then_some(self.high);
        let neg = (self.low < 0.0).then_some(-self.low);
        match (neg, pos) {
            (Some(n), Some(p)) => (n, p),
            (Some(n), None) => (n, n),
            (None, Some(p)) => (p, p),
            (None, None) => (1.0, 1.0),
        }
    }

    pub fn apply(&self, f: f64) -> f64 {
        let (neg, pos) = self.scales();
        if f > 0.0 {
            // Keep tiny positive scores strictly above the 0.5 slice.
            (0.5 + 0.5 * f / pos).clamp(0.5 + f64::EPSILON / 2.0, 1.0)
        } else {
            (0.5 + 0.5 * f / neg).clamp(0.0, 0.5)
        }
    }
}
