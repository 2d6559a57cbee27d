//! Command-line front end. Exit codes: 0 success, 1 usage, 2 data error,
//! 3 numerical error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    load_level_csv, run_returns_report, run_volatility_report, CsvOptions, PipelineError,
    ReportOptions, VolFamily,
};
use crate::diag::{spectrum_slope, tail_loglog_fit, TailSide};
use crate::fit::preprocess_returns;
use crate::sde::{
    relaxation_experiment, simulate, write_path_csv, RelaxConfig, RelaxStart, Scheme, SdeSpec,
    SimConfig,
};

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_VAR: &str = "GIGAVOL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "gigavol",
    version,
    about = "GIGa volatility and returns model toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// CSV file with a date column and a value column
    csv: PathBuf,
    #[arg(long, default_value = "Date")]
    date_col: String,
    #[arg(long, default_value = "Close")]
    value_col: String,
    /// Lines to skip before the header row
    #[arg(long, default_value_t = 0)]
    skip_rows: usize,
}

impl Input {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            date_col: self.date_col.clone(),
            value_col: self.value_col.clone(),
            skip_header_rows: self.skip_rows,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Giga,
    VarianceIga,
    Heston,
    GgaA,
    GgaB,
    GgaC,
    OuLog,
    LnVol,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Vol,
    Returns,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Side {
    Right,
    Left,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit GIGa, IGa, Ga and LN to a volatility level series
    FitVol {
        #[command(flatten)]
        input: Input,
        /// Restrict to these families (GIGa, IGa, Ga, LN)
        #[arg(long = "family")]
        families: Vec<String>,
    },
    /// Fit the product-distribution menu to returns of a price series
    FitReturns {
        #[command(flatten)]
        input: Input,
        /// Exponent of the fixed-gamma GIGa and GGa variants
        #[arg(long, default_value_t = 2.0)]
        fix_gamma: f64,
    },
    /// Simulate one path of a volatility SDE and write it as CSV
    Simulate {
        #[arg(long, value_enum, default_value = "giga")]
        kind: Kind,
        #[arg(long = "J", default_value_t = 0.1)]
        j: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long = "Sigma", default_value_t = 0.316_227_766_016_837_94)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Level of the OU and LN processes
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start value (default: stationary mean, or 1)
        #[arg(long)]
        x0: Option<f64>,
        /// Output CSV (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble relaxation-time experiment for the IGa process
    Relax {
        #[arg(long = "J", default_value_t = 0.1)]
        j: f64,
        #[arg(long = "Sigma", default_value_t = 0.316_227_766_016_837_94)]
        sigma: f64,
        #[arg(long, default_value_t = 5000)]
        paths: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Log-log tail fit of a level series
    Tails {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.9)]
        lo: f64,
        #[arg(long, default_value_t = 0.99)]
        hi: f64,
        #[arg(long, value_enum, default_value = "right")]
        side: Side,
        /// Fit the preprocessed returns instead of the levels
        #[arg(long)]
        returns: bool,
    },
    /// Power-spectrum slope and noise colour of a series
    Spectrum {
        #[command(flatten)]
        input: Input,
        /// Analyse the preprocessed returns instead of the levels
        #[arg(long)]
        returns: bool,
    },
    /// Full JSON report for a series
    Report {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "vol")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, PipelineError> {
    serde_json::to_string_pretty(value).map_err(|e| PipelineError::Json(e.to_string()))
}

fn emit_text(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), PipelineError> {
    match out {
        Some(p) => {
            let p = output_path(p);
            std::fs::write(&p, format!("{text}\n")).map_err(|e| io_err(&p, e))
        }
        None => writeln!(stdout, "{text}").map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn spec_for(kind: Kind, j: f64, theta: f64, sigma: f64, gamma: f64, mu: f64) -> SdeSpec {
    match kind {
        Kind::Giga => SdeSpec::GigaVol {
            j,
            theta,
            sigma,
            gamma,
        },
        Kind::VarianceIga => SdeSpec::VarianceIga {
            j_tilde: j,
            v_bar: theta,
            sigma_tilde: sigma,
        },
        Kind::Heston => SdeSpec::HestonVariance {
            j,
            v_bar: theta,
            phi: sigma,
        },
        Kind::GgaA => SdeSpec::GgaVolA {
            j,
            theta,
            sigma,
            gamma,
        },
        Kind::GgaB => SdeSpec::GgaVolB {
            j,
            theta,
            sigma,
            gamma,
        },
        Kind::GgaC => SdeSpec::GgaVolC {
            j,
            theta,
            sigma,
            gamma,
        },
        Kind::OuLog => SdeSpec::OuLog { theta, mu, sigma },
        Kind::LnVol => SdeSpec::LnVol { theta, mu, sigma },
    }
}

fn series(input: &Input, returns: bool, stderr: &mut dyn Write) -> Result<Vec<f64>, PipelineError> {
    let loaded = load_level_csv(&input.csv, &input.options())?;
    if loaded.dropped_rows > 0 {
        let _ = writeln!(
            stderr,
            "dropped {} rows without a numeric value",
            loaded.dropped_rows
        );
    }
    Ok(if returns {
        preprocess_returns(&loaded.frame.values)?.returns
    } else {
        loaded.frame.values
    })
}

fn execute(
    cmd: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), PipelineError> {
    match cmd {
        Command::FitVol { input, families } => {
            let mut opts = ReportOptions::default();
            if !families.is_empty() {
                opts.vol_families = families
                    .iter()
                    .map(|f| {
                        VolFamily::from_name(f)
                            .ok_or_else(|| PipelineError::UnknownFamily(f.clone()))
                    })
                    .collect::<Result<_, _>>()?;
            }
            let loaded = load_level_csv(&input.csv, &input.options())?;
            let report = run_volatility_report(&loaded.frame, &opts)?;
            emit_text(&report.to_json()?, None, stdout)
        }
        Command::FitReturns { input, fix_gamma } => {
            let opts = ReportOptions {
                product_families: ReportOptions::product_menu(fix_gamma),
                ..ReportOptions::default()
            };
            let loaded = load_level_csv(&input.csv, &input.options())?;
            let report = run_returns_report(&loaded.frame, &opts)?;
            emit_text(&report.to_json()?, None, stdout)
        }
        Command::Simulate {
            kind,
            j,
            theta,
            sigma,
            gamma,
            mu,
            dt,
            steps,
            seed,
            x0,
            out,
        } => {
            let spec = spec_for(kind, j, theta, sigma, gamma, mu);
            spec.validate()?;
            let x0 = match x0 {
                Some(v) => v,
                None => spec
                    .stationary()
                    .ok()
                    .and_then(|law| law.mean_var().ok())
                    .map_or(1.0, |(m, _)| m),
            };
            let cfg = SimConfig {
                dt,
                steps,
                x0,
                seed,
                scheme: Scheme::EulerMaruyama,
            };
            if cfg.is_coarse_for(&spec) {
                let _ = writeln!(
                    stderr,
                    "warning: dt times the relaxation rate is {:.3}; the Euler scheme is coarse",
                    dt * spec.relaxation_rate()
                );
            }
            let path = simulate(&spec, &cfg)?;
            match out {
                Some(p) => {
                    let p = output_path(&p);
                    let file = File::create(&p).map_err(|e| io_err(&p, e))?;
                    write_path_csv(BufWriter::new(file), dt, &path)?;
                }
                None => write_path_csv(&mut *stdout, dt, &path)?,
            }
            Ok(())
        }
        Command::Relax {
            j,
            sigma,
            paths,
            p,
            x0,
            dt,
            seed,
        } => {
            let mut cfg = RelaxConfig::new(j, sigma);
            cfg.n_paths = paths;
            cfg.p_threshold = p;
            cfg.start = RelaxStart::Fixed(x0);
            cfg.dt = dt;
            cfg.seed = seed;
            let result = relaxation_experiment(&cfg)?;
            emit_text(&json(&result)?, None, stdout)
        }
        Command::Tails {
            input,
            lo,
            hi,
            side,
            returns,
        } => {
            let data = series(&input, returns, stderr)?;
            let side = match side {
                Side::Right => TailSide::Right,
                Side::Left => TailSide::LeftAbs,
            };
            let fit = tail_loglog_fit(&data, lo, hi, side)?;
            emit_text(&json(&fit)?, None, stdout)
        }
        Command::Spectrum { input, returns } => {
            let data = series(&input, returns, stderr)?;
            let fit = spectrum_slope(&data)?;
            emit_text(&json(&fit)?, None, stdout)
        }
        Command::Report { input, mode, out } => {
            let loaded = load_level_csv(&input.csv, &input.options())?;
            let opts = ReportOptions::default();
            let report = match mode {
                Mode::Vol => run_volatility_report(&loaded.frame, &opts)?,
                Mode::Returns => run_returns_report(&loaded.frame, &opts)?,
            };
            emit_text(&report.to_json()?, out.as_deref(), stdout)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Results go to `stdout`; usage text and errors to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
