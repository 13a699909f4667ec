//! Time-series ingestion, window fuzzification and lagged datasets.
//!
//! The fuzzifier maps a window of crisp values to a triangular type-2
//! number: the outer supports are the window minimum and maximum, the peak
//! is the "main" value (last or mean), and the inner supports are pulled
//! from the peak towards the extremes by the factor `inner_shrink`.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{It2TriFou, Tt2Number};
use crate::regression::RegressionDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub value: f64,
}

/// Reads a two-column `date,value` CSV with an optional header line.
///
/// Dates are ISO-8601 calendar dates and must be strictly increasing;
/// values must be strictly positive.
pub fn load_csv<R: Read>(reader: R) -> Result<Vec<SeriesPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut points: Vec<SeriesPoint> = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let date = match NaiveDate::parse_from_str(&record[0], "%Y-%m-%d") {
            Ok(d) => d,
            // a non-date first line is a header
            Err(_) if k == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad date {:?}: {e}", &record[0]),
                })
            }
        };
        let value: f64 = record[1].parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad value {:?}: {e}", &record[1]),
        })?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("value must be positive, got {value}"),
            });
        }
        if let Some(prev) = points.last() {
            if date <= prev.date {
                return Err(Error::Parse {
                    line,
                    message: format!("dates must be strictly increasing ({} after {})", date, prev.date),
                });
            }
        }
        points.push(SeriesPoint { date, value });
    }
    Ok(points)
}

pub fn load_csv_path(path: &Path) -> Result<Vec<SeriesPoint>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainRule {
    #[default]
    Last,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzifierConfig {
    pub window_len: usize,
    pub main_rule: MainRule,
    pub inner_shrink: f64,
    pub lag_count: usize,
    pub intercept: bool,
}

impl Default for FuzzifierConfig {
    fn default() -> Self {
        Self {
            window_len: 5,
            main_rule: MainRule::Last,
            inner_shrink: 0.5,
            lag_count: 1,
            intercept: true,
        }
    }
}

impl FuzzifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::Config(format!("window_len must be at least 2, got {}", self.window_len)));
        }
        if !(self.inner_shrink > 0.0 && self.inner_shrink <= 1.0) {
            return Err(Error::Config(format!(
                "inner_shrink must lie in (0, 1], got {}",
                self.inner_shrink
            )));
        }
        if self.lag_count < 1 {
            return Err(Error::Config("lag_count must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of regressors produced by [`build_dataset`].
    pub fn regressors(&self) -> usize {
        self.lag_count + usize::from(self.intercept)
    }
}

pub fn fuzzify_window(window: &[f64], cfg: &FuzzifierConfig) -> Result<Tt2Number> {
    if window.len() != cfg.window_len {
        return Err(Error::DimensionMismatch {
            expected: cfg.window_len,
            found: window.len(),
        });
    }
    let low = window.iter().copied().fold(f64::INFINITY, f64::min);
    let high = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let main = match cfg.main_rule {
        MainRule::Last => window[window.len() - 1],
        MainRule::Mean => window.iter().sum::<f64>() / window.len() as f64,
    }
    .clamp(low, high);
    let theta = cfg.inner_shrink;
    let a_up = (main - theta * (main - low)).clamp(low, main);
    let c_low = (main + theta * (high - main)).clamp(main, high);
    Tt2Number::new(It2TriFou::new(low, a_up, main, c_low, high)?, Tt2Number::SYMMETRIC)
}

/// One regression row: lagged crisp inputs, fuzzified output and the crisp
/// value used as the forecasting target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub date: NaiveDate,
    pub inputs: Vec<f64>,
    /// `(a_low, a_up, peak, c_low, c_up)`.
    pub fou: [f64; 5],
    pub apex_fraction: f64,
    pub target: f64,
}

impl DatasetRow {
    pub fn output(&self) -> Result<Tt2Number> {
        Tt2Number::new(It2TriFou::from_array(self.fou)?, self.apex_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    pub fn to_regression(&self) -> Result<RegressionDataset> {
        let inputs = self.rows.iter().map(|r| r.inputs.clone()).collect();
        let outputs = self.rows.iter().map(DatasetRow::output).collect::<Result<Vec<_>>>()?;
        RegressionDataset::new(inputs, outputs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(text)?;
        for (i, row) in ds.rows.iter().enumerate() {
            row.output().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("dataset row {i}: {e}"),
            })?;
        }
        Ok(ds)
    }
}

/// Lagged dataset: for each usable index `t`, the inputs are the
/// `lag_count` previous values (most recent first) followed by a constant 1
/// when `intercept` is set, and the output fuzzifies the window ending at `t`.
///
/// The first usable index is `window_len + lag_count - 1`.
pub fn build_dataset(series: &[SeriesPoint], cfg: &FuzzifierConfig) -> Result<Dataset> {
    cfg.validate()?;
    let needed = cfg.window_len + cfg.lag_count;
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            have: series.len(),
        });
    }
    let values: Vec<f64> = series.iter().map(|p| p.value).collect();
    let mut rows = Vec::with_capacity(series.len() + 1 - needed);
    for t in (needed - 1)..series.len() {
        let mut inputs: Vec<f64> = (1..=cfg.lag_count).map(|k| values[t - k]).collect();
        if cfg.intercept {
            inputs.push(1.0);
        }
        let out = fuzzify_window(&values[t + 1 - cfg.window_len..=t], cfg)?;
        rows.push(DatasetRow {
            date: series[t].date,
            inputs,
            fou: out.fou.to_array(),
            apex_fraction: out.apex_fraction,
            target: values[t],
        });
    }
    Ok(Dataset { rows })
}

/// Rows dated strictly before `boundary` go to training, the rest to test.
pub fn split(dataset: &Dataset, boundary: NaiveDate) -> Result<(Dataset, Dataset)> {
    let (train, test): (Vec<_>, Vec<_>) = dataset.rows.iter().cloned().partition(|r| r.date < boundary);
    if train.is_empty() {
        return Err(Error::EmptySplit {
            boundary: boundary.to_string(),
            side: "train",
        });
    }
    if test.is_empty() {
        return Err(Error::EmptySplit {
            boundary: boundary.to_string(),
            side: "test",
        });
    }
    Ok((Dataset { rows: train }, Dataset { rows: test }))
}
