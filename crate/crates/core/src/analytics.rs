//! Perplexity → error-rate regression, threshold gating and the
//! alignment-based reward for model outputs.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::{decode_concatenated, decode_interleaved, TaskFormat};
use crate::metrics::alignment_score;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("need at least two distinct x values, got {0}")]
    TooFewDistinctX(usize),
    #[error("point {index}: {message}")]
    InvalidPoint { index: usize, message: String },
    #[error("reward is only defined for concatenated and interleaved outputs, not {0}")]
    UnsupportedFormat(TaskFormat),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Ordinary least-squares line of error rate on perplexity (or its log).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
    #[serde(default)]
    pub log_x: bool,
}

impl RegressionFit {
    /// Expected error rate at a perplexity.
    pub fn expected(&self, perplexity: f64) -> f64 {
        let x = if self.log_x { perplexity.ln() } else { perplexity };
        self.slope * x + self.intercept
    }
}

fn validate(points: &[(f64, f64)]) -> Result<(), AnalyticsError> {
    for (index, &(x, y)) in points.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(AnalyticsError::InvalidPoint {
                index,
                message: "non-finite value".into(),
            });
        }
        if x <= 0.0 {
            return Err(AnalyticsError::InvalidPoint {
                index,
                message: format!("perplexity must be positive, got {x}"),
            });
        }
        if y < 0.0 {
            return Err(AnalyticsError::InvalidPoint {
                index,
                message: format!("error rate must be non-negative, got {y}"),
            });
        }
    }
    Ok(())
}

fn ols(points: &[(f64, f64)]) -> Result<(f64, f64, f64), AnalyticsError> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(AnalyticsError::TooFewDistinctX(xs.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut ss_tot) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    // constant y (up to rounding): the fitted line passes through every point
    let scale = points.iter().map(|p| p.1 * p.1).sum::<f64>().max(f64::MIN_POSITIVE);
    let r2 = if ss_tot <= scale * 1e-24 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r2))
}

/// Fits error rate against raw perplexity.
pub fn fit(points: &[(f64, f64)]) -> Result<RegressionFit, AnalyticsError> {
    validate(points)?;
    let (slope, intercept, r2) = ols(points)?;
    Ok(RegressionFit {
        slope,
        intercept,
        r2,
        n: points.len(),
        log_x: false,
    })
}

/// Fits error rate against natural-log perplexity.
pub fn fit_log(points: &[(f64, f64)]) -> Result<RegressionFit, AnalyticsError> {
    validate(points)?;
    let logged: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y)).collect();
    let (slope, intercept, r2) = ols(&logged)?;
    Ok(RegressionFit {
        slope,
        intercept,
        r2,
        n: points.len(),
        log_x: true,
    })
}

/// Reads `perplexity,mer` rows after a header line.
pub fn read_points<R: Read>(reader: R) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize::<(f64, f64)>().map(|r| r.map_err(Into::into)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Predict,
    Fallback,
}

/// Use the model only when its expected error rate is strictly below the threshold.
pub fn gate(fitted: &RegressionFit, perplexity: f64, threshold: f64) -> GateDecision {
    if fitted.expected(perplexity) < threshold {
        GateDecision::Predict
    } else {
        GateDecision::Fallback
    }
}

/// Alignment score of decoded output, used as a scalar reward. Output that
/// lacks either line (or is malformed interleaved output) earns 0.
pub fn reward(model_output: &str, format: TaskFormat) -> Result<f64, AnalyticsError> {
    let decoded = match format {
        TaskFormat::Concatenated => decode_concatenated(model_output),
        TaskFormat::Interleaved => decode_interleaved(model_output),
        other => return Err(AnalyticsError::UnsupportedFormat(other)),
    };
    if !decoded.well_formed {
        return Ok(0.0);
    }
    Ok(match decoded.segmentation.as_deref() {
        Some(seg) if !seg.is_empty() && !decoded.glosses.is_empty() => alignment_score(&decoded.glosses, seg),
        _ => 0.0,
    })
}
