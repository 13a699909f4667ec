use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tt2fr::data::{self, FuzzifierConfig};
use tt2fr::eval::{self, ExperimentConfig, ForecastReport};
use tt2fr::regression::{self, CoefficientSet, Fit, ObjectiveMode};
use tt2fr::{Error, Result};

// stdout writes ignore errors so that a closed pipe ends output quietly
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! sayln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Triangular type-2 fuzzy linear regression on time series.
#[derive(Parser)]
#[command(name = "tt2fr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuzzify a `date,value` CSV into a dataset JSON.
    Fuzzify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit coefficients on the training split.
    Fit {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Forecast every row with previously fitted coefficients.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for forecast.csv; stdout when omitted.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit (or load coefficients), forecast both splits and write reports.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Evaluate these coefficients instead of fitting.
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
    /// Tabulate report files by test RMSE.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Series CSV or dataset JSON.
    #[arg(long)]
    input: PathBuf,
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "paper_literal")]
    PaperLiteral,
    #[value(name = "text_consistent")]
    TextConsistent,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(h) = self.h {
            cfg.fit.h = h;
        }
        if let Some(m) = self.mode {
            cfg.fit.objective_mode = match m {
                ModeArg::PaperLiteral => ObjectiveMode::PaperLiteral,
                ModeArg::TextConsistent => ObjectiveMode::TextConsistent,
            };
        }
        if let Some(s) = self.seed {
            cfg.fit.solver.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn read_coefficients(path: &Path) -> Result<CoefficientSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let raw: CoefficientSet = serde_json::from_str(&text)?;
    CoefficientSet::new(raw.as_slice().to_vec())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => eval::write_atomic(p, text.as_bytes()),
        None => {
            say!("{text}");
            Ok(())
        }
    }
}

fn fuzzify(input: &Path, cfg: &FuzzifierConfig, out: Option<&Path>) -> Result<()> {
    let series = data::load_csv_path(input)?;
    let ds = data::build_dataset(&series, cfg)?;
    emit(out, &(ds.to_json()? + "\n"))
}

fn fit(run: &RunArgs) -> Result<()> {
    let cfg = run.config()?;
    let ds = eval::load_input(&run.input, &cfg.fuzzifier)?;
    let (train, _) = eval::split_dataset(&ds, &cfg)?;
    let fit: Fit = eval::fit_dataset(&train, &cfg.fit)?;
    std::fs::create_dir_all(&run.out_dir).map_err(|e| Error::Io {
        path: run.out_dir.clone(),
        source: e,
    })?;
    let coeff_path = run.out_dir.join("coefficients.json");
    eval::write_atomic(&coeff_path, serde_json::to_string_pretty(&fit.coefficients)?.as_bytes())?;
    eval::write_atomic(&run.out_dir.join("fit.json"), serde_json::to_string_pretty(&fit)?.as_bytes())?;
    sayln!(
        "fitted {} coefficients on {} rows: status {:?}, objective {:.6}, kkt residual {:.2e}",
        fit.coefficients.len(),
        train.len(),
        fit.status,
        fit.objective_value,
        fit.kkt_residual
    );
    sayln!("wrote {}", coeff_path.display());
    Ok(())
}

fn predict(input: &Path, coefficients: &Path, config: Option<&Path>, out_dir: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let coeffs = read_coefficients(coefficients)?;
    let ds = eval::load_input(input, &cfg.fuzzifier)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "forecast", "a_low", "a_up", "peak", "c_low", "c_up"])?;
    for row in &ds.rows {
        let p = regression::predict(&coeffs, &row.inputs)?;
        let f = regression::defuzzify_with(&p, cfg.defuzzifier);
        let mut rec = vec![row.date.to_string(), f.to_string()];
        rec.extend(p.to_array().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match out_dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| Error::Io {
                path: d.to_path_buf(),
                source: e,
            })?;
            emit(Some(&d.join("forecast.csv")), &text)
        }
        None => emit(None, &text),
    }
}

fn run_eval(run: &RunArgs, coefficients: Option<&Path>) -> Result<()> {
    let cfg = run.config()?;
    let coeffs = coefficients.map(read_coefficients).transpose()?;
    let exp = eval::run_experiment(&run.input, &cfg, coeffs, &run.out_dir)?;
    let mut reports = vec![exp.report.clone()];
    reports.extend(exp.baseline.clone());
    say!("{}", eval::compare(&reports).to_text());
    for p in &exp.written {
        sayln!("wrote {}", p.display());
    }
    Ok(())
}

fn compare(paths: &[PathBuf], json: bool) -> Result<()> {
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            Ok(serde_json::from_str::<ForecastReport>(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = eval::compare(&reports);
    if json {
        sayln!("{}", table.to_json()?);
    } else {
        say!("{}", table.to_text());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fuzzify { input, config, out } => load_config(config.as_deref())
            .and_then(|cfg| fuzzify(input, &cfg.fuzzifier, out.as_deref())),
        Command::Fit { run } => fit(run),
        Command::Predict {
            input,
            coefficients,
            config,
            out_dir,
        } => predict(input, coefficients, config.as_deref(), out_dir.as_deref()),
        Command::Eval { run, coefficients } => run_eval(run, coefficients.as_deref()),
        Command::Compare { reports, json } => compare(reports, *json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
