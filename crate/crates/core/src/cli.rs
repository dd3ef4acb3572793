//! Command-line orchestration: ingestion, moments, solving or enumeration,
//! then rendering.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::enumeration::{
    rank_portfolios, single_portfolio, EnumerationError, MethodSelection, DEFAULT_ENUMERATION_CAP,
};
use crate::market_data::{compute_returns, parse_parameter_file, parse_price_table, DataError, ReturnKind};
use crate::moments::{
    asset_stats, estimate_moments, moments_from_parameters, CovDivisor, MomentError, MomentEstimate,
};
use crate::report::{build_traces, emit_trace, render_report, OutputFormat};

/// Bundled 4-asset parameter set (USD-JPY, Brent Oil, DAX, Dow Jones).
pub const SAMPLE_PARAMETERS: &str = include_str!("../data/sample_params.json");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Clone)]
pub enum InputSource {
    Prices(PathBuf),
    Parameters(PathBuf),
    Sample,
}

/// Options for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: InputSource,
    pub methods: MethodSelection,
    pub enumerate: bool,
    /// `None` lists every portfolio.
    pub top_k: Option<usize>,
    pub format: OutputFormat,
    pub trace: bool,
    pub returns: ReturnKind,
    pub cov: CovDivisor,
    pub label_column: bool,
    pub max_assets: Option<usize>,
}

impl RunConfig {
    pub fn new(source: InputSource) -> Self {
        Self {
            source,
            methods: MethodSelection::Both,
            enumerate: false,
            top_k: None,
            format: OutputFormat::Table,
            trace: false,
            returns: ReturnKind::Simple,
            cov: CovDivisor::Sample,
            label_column: false,
            max_assets: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    Data { path: String, source: DataError },
    #[error("{path}: {source}")]
    Moments { path: String, source: MomentError },
    #[error("{0}")]
    Numerical(EnumerationError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Io { .. } | RunError::Data { .. } | RunError::Moments { .. } => EXIT_INPUT,
            RunError::Numerical(EnumerationError::TooFewAssets { .. }) => EXIT_INPUT,
            RunError::Numerical(EnumerationError::EnumerationCapExceeded { .. }) => EXIT_USAGE,
            RunError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Mv,
    Mrar,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReturnsArg {
    Simple,
    Log,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CovArg {
    Sample,
    Population,
}

/// Minimum-variance and maximum risk-adjusted-return portfolios, optionally
/// over every subset of the assets.
#[derive(Debug, Parser)]
#[command(name = "portfolio-rar", version)]
struct Args {
    /// Price table CSV (header row of asset names).
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Parameter file with `assets`, `means` and `covariance` (JSON or TOML).
    #[arg(long, value_name = "PATH")]
    params: Option<PathBuf>,
    /// Use the bundled 4-asset sample parameters.
    #[arg(long)]
    sample: bool,
    /// First CSV column holds period labels.
    #[arg(long)]
    label_column: bool,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    /// Construct every portfolio of two or more assets.
    #[arg(long)]
    enumerate: bool,
    /// Show only the K best portfolios.
    #[arg(long, value_name = "K")]
    top: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Write step-by-step matrices and determinants to standard error.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum)]
    returns: Option<ReturnsArg>,
    #[arg(long, value_enum)]
    cov: Option<CovArg>,
    /// Raise the enumeration cap (default 20 assets).
    #[arg(long, value_name = "N")]
    max_assets: Option<usize>,
}

/// Outcome of argument parsing: either a config or text to print and an
/// exit code (help, version, usage errors).
pub enum Parsed {
    Run(RunConfig),
    Exit {
        code: i32,
        message: String,
        to_stderr: bool,
    },
}

pub fn parse_args<I, T>(args: I) -> Parsed
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return Parsed::Exit {
                code,
                message: e.render().to_string(),
                to_stderr: e.use_stderr(),
            };
        }
    };
    match config_from_args(args) {
        Ok(c) => Parsed::Run(c),
        Err(e) => Parsed::Exit {
            code: EXIT_USAGE,
            message: format!("error: {e}\n"),
            to_stderr: true,
        },
    }
}

fn config_from_args(args: Args) -> Result<RunConfig, RunError> {
    let source = match (args.input, args.params, args.sample) {
        (Some(p), None, false) => InputSource::Prices(p),
        (None, Some(p), false) => InputSource::Parameters(p),
        (None, None, true) => InputSource::Sample,
        (None, None, false) => {
            return Err(RunError::Usage(
                "one of --input, --params or --sample is required".into(),
            ))
        }
        _ => {
            return Err(RunError::Usage(
                "--input, --params and --sample are mutually exclusive".into(),
            ))
        }
    };
    let prices = matches!(source, InputSource::Prices(_));
    if !prices && (args.label_column || args.returns.is_some() || args.cov.is_some()) {
        return Err(RunError::Usage(
            "--label-column, --returns and --cov only apply to --input price tables".into(),
        ));
    }
    if args.top == Some(0) {
        return Err(RunError::Usage("--top must be at least 1".into()));
    }
    Ok(RunConfig {
        source,
        methods: match args.method {
            MethodArg::Mv => MethodSelection::Mv,
            MethodArg::Mrar => MethodSelection::Mrar,
            MethodArg::Both => MethodSelection::Both,
        },
        enumerate: args.enumerate,
        top_k: args.top,
        format: match args.format {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        },
        trace: args.trace,
        returns: match args.returns {
            Some(ReturnsArg::Log) => ReturnKind::Log,
            _ => ReturnKind::Simple,
        },
        cov: match args.cov {
            Some(CovArg::Population) => CovDivisor::Population,
            _ => CovDivisor::Sample,
        },
        label_column: args.label_column,
        max_assets: args.max_assets,
    })
}

fn read(path: &PathBuf) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Load the configured input and reduce it to moments.
pub fn load_moments(config: &RunConfig) -> Result<MomentEstimate, RunError> {
    match &config.source {
        InputSource::Prices(path) => {
            let name = path.display().to_string();
            let table =
                parse_price_table(&read(path)?, config.label_column).map_err(|source| RunError::Data {
                    path: name.clone(),
                    source,
                })?;
            let returns = compute_returns(&table, config.returns);
            estimate_moments(&returns, config.cov).map_err(|source| RunError::Moments { path: name, source })
        }
        InputSource::Parameters(path) => {
            let params = parse_parameter_file(&read(path)?).map_err(|source| RunError::Data {
                path: path.display().to_string(),
                source,
            })?;
            Ok(moments_from_parameters(&params))
        }
        InputSource::Sample => {
            let params = parse_parameter_file(SAMPLE_PARAMETERS).map_err(|source| RunError::Data {
                path: "<sample>".into(),
                source,
            })?;
            Ok(moments_from_parameters(&params))
        }
    }
}

/// Rendered results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub trace: Option<String>,
    pub portfolio_count: u64,
}

/// Run and return the rendered report and, when tracing, the trace text.
pub fn execute(config: &RunConfig) -> Result<RunOutput, RunError> {
    let moments = load_moments(config)?;
    let report = if config.enumerate {
        let cap = config.max_assets.unwrap_or(DEFAULT_ENUMERATION_CAP);
        rank_portfolios(&moments, config.methods, cap)
    } else {
        single_portfolio(&moments, config.methods)
    }
    .map_err(RunError::Numerical)?;
    let portfolio_count = report.portfolio_count;
    let shown = match config.top_k {
        Some(k) => report.top(k),
        None => report,
    };
    let rendered = render_report(&shown, &asset_stats(&moments), config.format);
    let trace = config.trace.then(|| emit_trace(&build_traces(&shown, &moments)));
    Ok(RunOutput {
        report: rendered,
        trace,
        portfolio_count,
    })
}

/// Execute `config`, writing the report to `out` and diagnostics and trace to
/// `diag`. Returns the process exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match execute(config) {
        Ok(output) => {
            if config.enumerate {
                let _ = writeln!(diag, "constructed {} portfolios", output.portfolio_count);
            }
            if out
                .write_all(output.report.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return EXIT_INPUT;
            }
            if let Some(t) = output.trace {
                let _ = diag.write_all(t.as_bytes());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            e.exit_code()
        }
    }
}

/// Full command-line entry point over explicit argument and stream handles.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, diag: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args) {
        Parsed::Run(config) => run(&config, out, diag),
        Parsed::Exit {
            code,
            message,
            to_stderr,
        } => {
            let stream: &mut dyn Write = if to_stderr { diag } else { out };
            let _ = stream.write_all(message.as_bytes());
            code
        }
    }
}
