//! Grade bands over predicted totals and the resulting failure rate.

use thiserror::Error;

use crate::regression::{predict, Dataset, FittedModel, RegressionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("failure rate of an empty report is undefined")]
    EmptyReport,
    #[error("grade bands: {0}")]
    InvalidBands(String),
    #[error(transparent)]
    Predict(#[from] RegressionError),
}

/// Passing bands, highest first, each covering `[min_inclusive, next band's
/// min)`; everything below the lowest passing band gets `fail_label`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeBands {
    passing: Vec<(String, f64)>,
    fail_label: String,
}

impl Default for GradeBands {
    /// A 70, B 60, C 50, D 45, E 40, F below 40.
    fn default() -> Self {
        GradeBands::new(
            [("A", 70.0), ("B", 60.0), ("C", 50.0), ("D", 45.0), ("E", 40.0)]
                .into_iter()
                .map(|(l, m)| (l.to_string(), m))
                .collect(),
            "F",
        )
        .expect("default bands are valid")
    }
}

impl GradeBands {
    pub fn new(passing: Vec<(String, f64)>, fail_label: &str) -> Result<Self, ClassifyError> {
        if passing.is_empty() {
            return Err(ClassifyError::InvalidBands("need at least one passing band".into()));
        }
        if passing.iter().any(|(_, m)| !m.is_finite()) {
            return Err(ClassifyError::InvalidBands("band minimums must be finite".into()));
        }
        if passing.windows(2).any(|w| w[0].1 <= w[1].1) {
            return Err(ClassifyError::InvalidBands("band minimums must strictly decrease".into()));
        }
        Ok(GradeBands {
            passing,
            fail_label: fail_label.to_string(),
        })
    }

    /// Minimum of the lowest passing band.
    pub fn failure_threshold(&self) -> f64 {
        self.passing.last().expect("non-empty").1
    }

    pub fn passing(&self) -> &[(String, f64)] {
        &self.passing
    }

    pub fn fail_label(&self) -> &str {
        &self.fail_label
    }

    /// Moves the pass/fail boundary to `threshold`. Bands lying wholly at or
    /// below the new boundary are dropped and the band containing it is
    /// stretched down to start there.
    pub fn with_failure_threshold(&self, threshold: f64) -> Result<Self, ClassifyError> {
        if !threshold.is_finite() {
            return Err(ClassifyError::InvalidBands(format!("threshold {threshold} is not finite")));
        }
        let mut passing: Vec<(String, f64)> = self.passing.iter().filter(|(_, m)| *m > threshold).cloned().collect();
        match self.passing.iter().find(|(_, m)| *m <= threshold) {
            Some((label, _)) => passing.push((label.clone(), threshold)),
            None => passing.last_mut().expect("non-empty").1 = threshold,
        }
        GradeBands::new(passing, &self.fail_label)
    }

    pub fn label(&self, value: f64) -> &str {
        self.passing
            .iter()
            .find(|(_, m)| *m <= value)
            .map(|(l, _)| l.as_str())
            .unwrap_or(&self.fail_label)
    }

    /// Strictly below the threshold fails; NaN fails.
    pub fn fails(&self, value: f64) -> bool {
        !(value >= self.failure_threshold())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    /// 1-based data row.
    pub row: usize,
    pub predicted: f64,
    pub label: String,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub rows: Vec<RowResult>,
    pub fail_count: usize,
    pub total_count: usize,
    pub failure_rate_percent: f64,
}

impl ClassificationReport {
    pub fn from_predictions(predictions: &[f64], bands: &GradeBands) -> Self {
        let rows: Vec<RowResult> = predictions
            .iter()
            .enumerate()
            .map(|(i, &p)| RowResult {
                row: i + 1,
                predicted: p,
                label: bands.label(p).to_string(),
                failed: bands.fails(p),
            })
            .collect();
        let fail_count = rows.iter().filter(|r| r.failed).count();
        let total_count = rows.len();
        let failure_rate_percent = if total_count == 0 {
            0.0
        } else {
            percent(fail_count, total_count)
        };
        ClassificationReport {
            rows,
            fail_count,
            total_count,
            failure_rate_percent,
        }
    }
}

fn percent(fails: usize, total: usize) -> f64 {
    100.0 * fails as f64 / total as f64
}

pub fn classify_rows(model: &FittedModel, data: &Dataset, bands: &GradeBands) -> Result<ClassificationReport, ClassifyError> {
    let predictions = predict(model, data)?;
    Ok(ClassificationReport::from_predictions(&predictions, bands))
}

pub fn failure_rate(report: &ClassificationReport) -> Result<f64, ClassifyError> {
    if report.total_count == 0 {
        return Err(ClassifyError::EmptyReport);
    }
    Ok(percent(report.fail_count, report.total_count))
}
