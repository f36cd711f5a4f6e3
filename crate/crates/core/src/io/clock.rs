use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest drift factor accepted as physical.
pub const MAX_DRIFT_FACTOR: f64 = 1e-3;
/// Fractional drift between acquisition and reference clocks observed in the
/// reference measurement.
pub const REFERENCE_DRIFT_FACTOR: f64 = 1.25e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimestampRecord {
    /// Acquisition-clock time, s.
    pub raw_time: f64,
    /// Reference-clock time, s.
    pub corrected_time: f64,
}

impl TimestampRecord {
    pub fn raw(raw_time: f64) -> Self {
        Self {
            raw_time,
            corrected_time: raw_time,
        }
    }
}

/// `corrected = raw · (1 − factor)`; a positive factor shrinks acquisition
/// timestamps. Order is preserved.
pub fn correct_clock_drift(records: &[TimestampRecord], factor: f64) -> Result<Vec<TimestampRecord>> {
    if !(factor.is_finite() && factor.abs() < MAX_DRIFT_FACTOR) {
        return Err(invalid("drift_factor", format!("|{factor}| must be below {MAX_DRIFT_FACTOR}")));
    }
    Ok(records
        .iter()
        .map(|r| TimestampRecord {
            raw_time: r.raw_time,
            corrected_time: r.raw_time * (1.0 - factor),
        })
        .collect())
}
