//! Forecast evaluation, experiment runs and comparison tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, FuzzifierConfig};
use crate::error::{Error, Result};
use crate::fuzzy::It2TriFou;
use crate::regression::{self, CoefficientSet, Defuzzifier, Fit, FitConfig};

/// Root mean square error between two equally long, nonempty vectors.
pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let sse: f64 = actual.iter().zip(forecast).map(|(a, f)| (a - f) * (a - f)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Label used in reports.
    pub model: String,
    pub fuzzifier: FuzzifierConfig,
    pub fit: FitConfig,
    /// Rows dated before this go to training. Without it the first
    /// `train_fraction` of the rows are used.
    pub split_date: Option<NaiveDate>,
    pub train_fraction: f64,
    pub defuzzifier: Defuzzifier,
    /// Also evaluate an ordinary least-squares model on the crisp targets.
    pub baseline: bool,
    /// Write an SVG chart next to the forecast CSV.
    pub chart: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: "tt2fr".into(),
            fuzzifier: FuzzifierConfig::default(),
            fit: FitConfig::default(),
            split_date: None,
            train_fraction: 0.8,
            defuzzifier: Defuzzifier::default(),
            baseline: true,
            chart: true,
        }
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

impl ExperimentConfig {
    /// Parses a TOML or JSON config. The format follows the file extension;
    /// other extensions are tried as JSON first, then TOML.
    pub fn from_str_with_format(text: &str, json: Option<bool>) -> Result<Self> {
        fn parse<T: serde::de::DeserializeOwned>(text: &str, json: Option<bool>) -> Result<T> {
            match json {
                Some(true) => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string())),
                Some(false) => toml::from_str(text).map_err(|e| Error::Config(e.to_string())),
                None => serde_json::from_str(text)
                    .or_else(|_| toml::from_str(text))
                    .map_err(|e: toml::de::Error| Error::Config(e.to_string())),
            }
        }
        let probe: VersionProbe = parse(text, json)?;
        match probe.schema_version {
            None => return Err(Error::Config("missing schema_version".into())),
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
        }
        let cfg: Self = parse(text, json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let json = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Some(true),
            Some("toml") => Some(false),
            _ => None,
        };
        Self::from_str_with_format(&text, json)
    }

    pub fn validate(&self) -> Result<()> {
        self.fuzzifier.validate()?;
        self.fit.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Reads a dataset JSON (`.json`) or a `date,value` series CSV, which is
/// fuzzified with `cfg`.
pub fn load_input(path: &Path, cfg: &FuzzifierConfig) -> Result<Dataset> {
    let is_json = path.extension().is_some_and(|e| e == "json");
    let ds = if is_json {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_json(&text)?
    } else {
        data::build_dataset(&data::load_csv_path(path)?, cfg)?
    };
    Ok(ds)
}

/// Splits by `cfg.split_date`, or after the first `train_fraction` of rows.
pub fn split_dataset(ds: &Dataset, cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let boundary = match cfg.split_date {
        Some(d) => d,
        None => {
            if ds.len() < 2 {
                return Err(Error::InsufficientData {
                    needed: 2,
                    have: ds.len(),
                });
            }
            let k = ((ds.len() as f64 * cfg.train_fraction).round() as usize).clamp(1, ds.len() - 1);
            ds.rows[k].date
        }
    };
    data::split(ds, boundary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSide {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub date: NaiveDate,
    pub split: SplitSide,
    pub actual: f64,
    pub forecast: f64,
    /// Predicted footprint `(a_low, a_up, peak, c_low, c_up)`.
    pub predicted: [f64; 5],
    /// Predicted footprint cut at the report's `h`.
    pub reduced: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub model: String,
    /// Cut level, absent for crisp models.
    pub h: Option<f64>,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub records: Vec<ForecastRecord>,
}

impl ForecastReport {
    fn from_records(model: &str, h: Option<f64>, records: Vec<ForecastRecord>) -> Result<Self> {
        let side = |s: SplitSide| -> (Vec<f64>, Vec<f64>) {
            records.iter().filter(|r| r.split == s).map(|r| (r.actual, r.forecast)).unzip()
        };
        let (train_a, train_f) = side(SplitSide::Train);
        let (test_a, test_f) = side(SplitSide::Test);
        Ok(Self {
            model: model.to_string(),
            h,
            train_rmse: rmse(&train_a, &train_f)?,
            test_rmse: rmse(&test_a, &test_f)?,
            train_count: train_a.len(),
            test_count: test_a.len(),
            records,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `date,actual,forecast,a_low,a_up,c_low,c_up` with one row per record.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "actual", "forecast", "a_low", "a_up", "c_low", "c_up"])?;
        for r in &self.records {
            let p = r.predicted;
            w.write_record([
                r.date.to_string(),
                r.actual.to_string(),
                r.forecast.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                p[3].to_string(),
                p[4].to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Line chart of actual and forecast values over the upper-membership band.
    pub fn to_svg(&self) -> String {
        svg_chart(self)
    }
}

/// Forecasts every row of `train` and `test` with fuzzy coefficients.
pub fn evaluate(
    model: &str,
    coeffs: &CoefficientSet,
    train: &Dataset,
    test: &Dataset,
    h: f64,
    defuzzifier: Defuzzifier,
) -> Result<ForecastReport> {
    let mut records = Vec::with_capacity(train.len() + test.len());
    for (ds, split) in [(train, SplitSide::Train), (test, SplitSide::Test)] {
        for row in &ds.rows {
            let pred = regression::predict(coeffs, &row.inputs)?;
            let reduced = regression::predicted_reduction(&pred, row.apex_fraction, h)?;
            records.push(ForecastRecord {
                date: row.date,
                split,
                actual: row.target,
                forecast: regression::defuzzify_with(&pred, defuzzifier),
                predicted: pred.to_array(),
                reduced: reduced.to_fou().to_array(),
            });
        }
    }
    ForecastReport::from_records(model, Some(h), records)
}

/// Ordinary least squares from the inputs to the crisp targets.
pub fn least_squares(train: &Dataset) -> Result<Vec<f64>> {
    let q = train.rows.first().map_or(0, |r| r.inputs.len());
    if train.len() < q || q == 0 {
        return Err(Error::InsufficientData {
            needed: q.max(1),
            have: train.len(),
        });
    }
    let x = DMatrix::from_fn(train.len(), q, |i, j| train.rows[i].inputs[j]);
    let y = DVector::from_iterator(train.len(), train.rows.iter().map(|r| r.target));
    let svd = x.svd(true, true);
    let w = svd.solve(&y, 1e-12).expect("svd computed with both factors");
    Ok(w.iter().copied().collect())
}

pub fn evaluate_least_squares(train: &Dataset, test: &Dataset) -> Result<ForecastReport> {
    let w = least_squares(train)?;
    let mut records = Vec::with_capacity(train.len() + test.len());
    for (ds, split) in [(train, SplitSide::Train), (test, SplitSide::Test)] {
        for row in &ds.rows {
            if row.inputs.len() != w.len() {
                return Err(Error::DimensionMismatch {
                    expected: w.len(),
                    found: row.inputs.len(),
                });
            }
            let f: f64 = row.inputs.iter().zip(&w).map(|(x, b)| x * b).sum();
            let crisp = It2TriFou::crisp(f).to_array();
            records.push(ForecastRecord {
                date: row.date,
                split,
                actual: row.target,
                forecast: f,
                predicted: crisp,
                reduced: crisp,
            });
        }
    }
    ForecastReport::from_records("classic_regression", None, records)
}

/// Fits on the training rows of `ds`.
pub fn fit_dataset(ds: &Dataset, cfg: &FitConfig) -> Result<Fit> {
    let reg = ds.to_regression().map_err(|e| e.in_stage("data"))?;
    regression::fit_tt2fr(&reg, cfg).map_err(|e| e.in_stage("fit"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub coefficients: CoefficientSet,
    /// Absent when the coefficients were supplied rather than fitted.
    pub fit: Option<Fit>,
    pub report: ForecastReport,
    pub baseline: Option<ForecastReport>,
    pub written: Vec<PathBuf>,
}

/// Loads, splits, fits (unless `coefficients` is given), forecasts every
/// row and writes the artifacts into `out_dir`.
pub fn run_experiment(
    input: &Path,
    cfg: &ExperimentConfig,
    coefficients: Option<CoefficientSet>,
    out_dir: &Path,
) -> Result<Experiment> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let ds = load_input(input, &cfg.fuzzifier).map_err(|e| e.in_stage("load"))?;
    let (train, test) = split_dataset(&ds, cfg).map_err(|e| e.in_stage("split"))?;
    let (coefficients, fit) = match coefficients {
        Some(c) => (c, None),
        None => {
            let fit = fit_dataset(&train, &cfg.fit)?;
            (fit.coefficients.clone(), Some(fit))
        }
    };
    let report = evaluate(&cfg.model, &coefficients, &train, &test, cfg.fit.h, cfg.defuzzifier)
        .map_err(|e| e.in_stage("forecast"))?;
    let baseline = if cfg.baseline {
        Some(evaluate_least_squares(&train, &test).map_err(|e| e.in_stage("baseline"))?)
    } else {
        None
    };

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e).in_stage("write"))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<()> {
        let path = out_dir.join(name);
        write_atomic(&path, text.as_bytes()).map_err(|e| e.in_stage("write"))?;
        written.push(path);
        Ok(())
    };
    put("report.json", &report.to_json()?)?;
    put("forecast.csv", &report.to_csv()?)?;
    put("coefficients.json", &serde_json::to_string_pretty(&coefficients)?)?;
    if let Some(b) = &baseline {
        put("baseline_report.json", &b.to_json()?)?;
    }
    if cfg.chart {
        put("forecast.svg", &report.to_svg())?;
    }
    Ok(Experiment {
        coefficients,
        fit,
        report,
        baseline,
        written,
    })
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub h: Option<f64>,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// One row per report, ascending by test RMSE.
pub fn compare(reports: &[ForecastReport]) -> Comparison {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|r| ComparisonRow {
            model: r.model.clone(),
            h: r.h,
            train_rmse: r.train_rmse,
            test_rmse: r.test_rmse,
        })
        .collect();
    rows.sort_by(|a, b| a.test_rmse.total_cmp(&b.test_rmse));
    Comparison { rows }
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<width$}  {:>6}  {:>14}  {:>14}\n", "model", "h", "train_rmse", "test_rmse");
        for r in &self.rows {
            let h = r.h.map_or_else(|| "-".to_string(), |h| format!("{h:.2}"));
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>14.6}  {:>14.6}",
                r.model, h, r.train_rmse, r.test_rmse
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn svg_chart(report: &ForecastReport) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    let recs = &report.records;
    let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    svg.push('\n');
    if recs.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (lo, hi) = recs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (
            lo.min(r.actual).min(r.predicted[0]),
            hi.max(r.actual).max(r.predicted[4]),
        )
    });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = recs.len();
    let x = |i: usize| PAD + (W - 2.0 * PAD) * if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / span;
    let line = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(a, b)| format!("{a:.2},{b:.2}")).collect::<Vec<_>>().join(" ")
    };

    let upper = line(&mut recs.iter().enumerate().map(|(i, r)| (x(i), y(r.predicted[4]))));
    let lower = line(&mut recs.iter().enumerate().rev().map(|(i, r)| (x(i), y(r.predicted[0]))));
    let _ = writeln!(svg, r##"<polygon points="{upper} {lower}" fill="#9ecae1" fill-opacity="0.5" stroke="none"/>"##);
    let actual = line(&mut recs.iter().enumerate().map(|(i, r)| (x(i), y(r.actual))));
    let _ = writeln!(svg, r##"<polyline points="{actual}" fill="none" stroke="#000000" stroke-width="1.5"/>"##);
    let forecast = line(&mut recs.iter().enumerate().map(|(i, r)| (x(i), y(r.forecast))));
    let _ = writeln!(svg, r##"<polyline points="{forecast}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##);
    if let Some(k) = recs.iter().position(|r| r.split == SplitSide::Test) {
        let xs = x(k);
        let _ = writeln!(
            svg,
            r##"<line x1="{xs:.2}" y1="{PAD}" x2="{xs:.2}" y2="{}" stroke="#666666" stroke-dasharray="4 4"/>"##,
            H - PAD
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="12">{} h={} train_rmse={:.4} test_rmse={:.4}</text>"#,
        report.model,
        report.h.map_or_else(|| "-".into(), |h| h.to_string()),
        report.train_rmse,
        report.test_rmse
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetRow, SeriesPoint};

    #[test]
    fn rmse_examples() {
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.535533906).abs() < 1e-9);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(rmse(&[], &[]).is_err());
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    fn report(model: &str, train: f64, test: f64) -> ForecastReport {
        ForecastReport {
            model: model.into(),
            h: Some(0.4),
            train_rmse: train,
            test_rmse: test,
            train_count: 0,
            test_count: 0,
            records: vec![],
        }
    }

    #[test]
    fn compare_orders_by_test_rmse() {
        let one = compare(&[report("a", 1.0, 2.0)]);
        assert_eq!(one.rows.len(), 1);
        assert_eq!(one.to_text().lines().count(), 2);

        let two = compare(&[report("worse", 1.0, 9.0), report("better", 5.0, 3.0)]);
        assert_eq!(two.rows[0].model, "better");
        assert_eq!(two.rows[1].model, "worse");
        let back = Comparison::from_json(&two.to_json().unwrap()).unwrap();
        assert_eq!(back, two);
        assert_eq!(back.to_text(), two.to_text());
    }

    #[test]
    fn config_requires_schema_version() {
        assert!(matches!(
            ExperimentConfig::from_str_with_format("model = \"x\"", Some(false)),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_str_with_format("schema_version = 2", Some(false)).is_err());
        let cfg = ExperimentConfig::from_str_with_format("schema_version = 1\n[fit]\nh = 0.25\n", Some(false)).unwrap();
        assert_eq!(cfg.fit.h, 0.25);
        let cfg = ExperimentConfig::from_str_with_format(r#"{"schema_version": 1, "model": "m"}"#, None).unwrap();
        assert_eq!(cfg.model, "m");
    }

    #[test]
    fn config_rejects_h_outside_range() {
        let err = ExperimentConfig::from_str_with_format("schema_version = 1\n[fit]\nh = 1.0\n", Some(false)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(ExperimentConfig::from_str_with_format("schema_version = 1\nbogus = 3\n", Some(false)).is_err());
    }

    fn crisp_dataset(n: usize) -> Dataset {
        let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
        let rows = (0..n)
            .map(|i| {
                let x = 1.0 + i as f64;
                let y = 2.0 * x + 3.0;
                DatasetRow {
                    date: start + chrono::Days::new(i as u64),
                    inputs: vec![x, 1.0],
                    fou: [y; 5],
                    apex_fraction: 0.5,
                    target: y,
                }
            })
            .collect();
        Dataset { rows }
    }

    #[test]
    fn least_squares_recovers_line() {
        let ds = crisp_dataset(6);
        let w = least_squares(&ds).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-10 && (w[1] - 3.0).abs() < 1e-10);
        let (train, test) = data::split(&ds, ds.rows[4].date).unwrap();
        let r = evaluate_least_squares(&train, &test).unwrap();
        assert!(r.test_rmse < 1e-9);
        assert_eq!((r.train_count, r.test_count), (4, 2));
    }

    #[test]
    fn evaluate_crisp_coefficients() {
        let ds = crisp_dataset(5);
        let coeffs = CoefficientSet::new(vec![It2TriFou::crisp(2.0), It2TriFou::crisp(3.0)]).unwrap();
        let (train, test) = data::split(&ds, ds.rows[3].date).unwrap();
        let r = evaluate("m", &coeffs, &train, &test, 0.4, Defuzzifier::Peak).unwrap();
        assert_eq!(r.train_rmse, 0.0);
        assert_eq!(r.test_rmse, 0.0);
        assert_eq!(r.records.len(), 5);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("date,actual,forecast,a_low,a_up,c_low,c_up\n"));
        assert_eq!(csv.lines().count(), 6);
        assert!(r.to_svg().contains("<polyline"));
    }

    #[test]
    fn default_split_uses_fraction() {
        let ds = crisp_dataset(10);
        let (train, test) = split_dataset(&ds, &ExperimentConfig::default()).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn experiment_on_crisp_series_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
        let pts: Vec<SeriesPoint> = (0..20)
            .map(|i| SeriesPoint {
                date: start + chrono::Days::new(i),
                value: 100.0,
            })
            .collect();
        let mut csv = String::new();
        for p in &pts {
            let _ = writeln!(csv, "{},{}", p.date, p.value);
        }
        let input = dir.path().join("s.csv");
        std::fs::write(&input, csv).unwrap();
        let out = dir.path().join("out");
        let exp = run_experiment(&input, &ExperimentConfig::default(), None, &out).unwrap();
        assert!(exp.report.train_rmse < 1e-6, "{}", exp.report.train_rmse);
        for name in ["report.json", "forecast.csv", "coefficients.json", "baseline_report.json", "forecast.svg"] {
            assert!(out.join(name).exists(), "{name}");
        }
    }
}
