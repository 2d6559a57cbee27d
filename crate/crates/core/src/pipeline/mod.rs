//! CSV ingestion, batch fitting and report assembly.

pub mod cli;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{spectrum_slope, tail_loglog_fit, DiagError, SpectrumFit, TailFit, TailSide};
use crate::fit::{
    fit_fixed_gamma, fit_gga_giga, fit_ln, fit_product, preprocess_returns, standardize, BaseKind,
    FitError, FitResult, GammaSearch, SimplexConfig,
};
use crate::sde::SdeError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("line {line}: cannot parse date {text:?}")]
    BadDate { line: usize, text: String },
    #[error("line {line}: dates are not strictly increasing")]
    NonIncreasingDates { line: usize },
    #[error("line {line}: level {value} is not positive")]
    NonPositiveLevel { line: usize, value: f64 },
    #[error("no usable rows")]
    Empty,
    #[error("need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("expected a {expected:?} series, got {got:?}")]
    WrongKind {
        expected: SeriesKind,
        got: SeriesKind,
    },
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error("json: {0}")]
    Json(String),
}

impl PipelineError {
    /// Process exit code: 2 for bad input data, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Fit(FitError::TooFewData { .. } | FitError::OutOfSupport { .. })
            | PipelineError::Diag(
                DiagError::TooFewPoints { .. } | DiagError::InvalidWindow { .. },
            )
            | PipelineError::Diag(DiagError::NonPositiveInWindow(_) | DiagError::ConstantSeries) => {
                2
            }
            PipelineError::Sde(
                SdeError::InvalidParameter { .. } | SdeError::NonPositiveStart(_),
            ) => 2,
            PipelineError::Fit(_) | PipelineError::Diag(_) | PipelineError::Sde(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    Level,
    LogReturn,
    PreprocessedReturn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFrame {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub kind: SeriesKind,
}

impl SeriesFrame {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub date_col: String,
    pub value_col: String,
    /// Lines before the header row to skip (e.g. a disclaimer line).
    pub skip_header_rows: usize,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            date_col: "Date".into(),
            value_col: "Close".into(),
            skip_header_rows: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub frame: SeriesFrame,
    /// Rows dropped for a missing or non-numeric value.
    pub dropped_rows: usize,
}

const DATE_FORMATS: [&str; 4] = ["%Y-%m-%d", "%m/%d/%Y", "%Y/%m/%d", "%Y%m%d"];

fn parse_date(text: &str) -> Option<NaiveDate> {
    let t = text.trim();
    DATE_FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(t, f).ok())
}

/// Reads a (date, value) level series from a CSV file.
pub fn load_level_csv(path: &Path, opts: &CsvOptions) -> Result<LoadedSeries, PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = BufReader::new(File::open(path).map_err(io)?);
    let mut skipped = String::new();
    for _ in 0..opts.skip_header_rows {
        skipped.clear();
        reader.read_line(&mut skipped).map_err(io)?;
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_level_csv(reader, &name, opts, opts.skip_header_rows)
}

/// As [`load_level_csv`] on an already opened reader positioned at the header.
pub fn read_level_csv<R: std::io::Read>(
    reader: R,
    name: &str,
    opts: &CsvOptions,
    line_offset: usize,
) -> Result<LoadedSeries, PipelineError> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| PipelineError::Csv(e.to_string()))?
        .clone();
    let find = |col: &str| {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(col))
            .ok_or_else(|| PipelineError::MissingColumn(col.to_string()))
    };
    let (di, vi) = (find(&opts.date_col)?, find(&opts.value_col)?);
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    let mut dropped = 0;
    for (k, record) in csv.records().enumerate() {
        let record = record.map_err(|e| PipelineError::Csv(e.to_string()))?;
        let line = line_offset + k + 2;
        let date_text = record.get(di).unwrap_or("");
        if date_text.is_empty() && record.iter().all(str::is_empty) {
            continue;
        }
        let date = parse_date(date_text).ok_or_else(|| PipelineError::BadDate {
            line,
            text: date_text.to_string(),
        })?;
        let value = match record.get(vi).and_then(|v| v.parse::<f64>().ok()) {
            Some(v) if v.is_finite() => v,
            _ => {
                dropped += 1;
                continue;
            }
        };
        if value <= 0.0 {
            return Err(PipelineError::NonPositiveLevel { line, value });
        }
        if dates.last().is_some_and(|d| *d >= date) {
            return Err(PipelineError::NonIncreasingDates { line });
        }
        dates.push(date);
        values.push(value);
    }
    if values.is_empty() {
        return Err(PipelineError::Empty);
    }
    Ok(LoadedSeries {
        frame: SeriesFrame {
            name: name.to_string(),
            dates,
            values,
            kind: SeriesKind::Level,
        },
        dropped_rows: dropped,
    })
}

/// Log-returns r_t = ln S_t − ln S_{t−1}, dated by the later day.
pub fn to_returns(frame: &SeriesFrame) -> Result<SeriesFrame, PipelineError> {
    if frame.kind != SeriesKind::Level {
        return Err(PipelineError::WrongKind {
            expected: SeriesKind::Level,
            got: frame.kind,
        });
    }
    if frame.len() < 2 {
        return Err(PipelineError::TooShort {
            needed: 2,
            got: frame.len(),
        });
    }
    if let Some(k) = frame.values.iter().position(|v| !(*v > 0.0)) {
        return Err(PipelineError::NonPositiveLevel {
            line: k + 2,
            value: frame.values[k],
        });
    }
    Ok(SeriesFrame {
        name: frame.name.clone(),
        dates: frame.dates[1..].to_vec(),
        values: frame
            .values
            .windows(2)
            .map(|w| (w[1] / w[0]).ln())
            .collect(),
        kind: SeriesKind::LogReturn,
    })
}

pub const MIN_POINTS: usize = 200;

/// Keeps frames with at least `min_points` values; returns (kept, names of
/// the dropped ones).
pub fn min_length_filter(
    frames: Vec<SeriesFrame>,
    min_points: usize,
) -> (Vec<SeriesFrame>, Vec<String>) {
    let (kept, dropped): (Vec<_>, Vec<_>) = frames.into_iter().partition(|f| f.len() >= min_points);
    (kept, dropped.into_iter().map(|f| f.name).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMode {
    Volatility,
    Returns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub family: String,
    pub error: String,
}

/// Constants of the returns preprocessing, and the moments of what was fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub raw_mean: f64,
    pub raw_stdev: f64,
    pub fitted_mean: f64,
    pub fitted_stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub mode: ReportMode,
    pub units: String,
    pub n_points: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub baseline: String,
    /// Successful fits, best mean log-likelihood first.
    pub fits: Vec<FitResult>,
    pub failures: Vec<FitFailure>,
    pub tail: Vec<TailFit>,
    pub spectrum: Option<SpectrumFit>,
    pub preprocessing: Option<Preprocessing>,
}

impl Report {
    pub fn to_json(&self) -> Result<String, PipelineError> {
        serde_json::to_string_pretty(self).map_err(|e| PipelineError::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Json(e.to_string()))
    }

    pub fn fit(&self, family: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.family == family)
    }
}

/// Volatility-mode family menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolFamily {
    /// Free exponent; the better of the GIGa and GGa branches.
    #[serde(rename = "GIGa")]
    Giga,
    #[serde(rename = "IGa")]
    Iga,
    #[serde(rename = "Ga")]
    Ga,
    #[serde(rename = "LN")]
    Ln,
}

impl VolFamily {
    pub const ALL: [VolFamily; 4] = [
        VolFamily::Giga,
        VolFamily::Iga,
        VolFamily::Ga,
        VolFamily::Ln,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VolFamily::Giga => "GIGa",
            VolFamily::Iga => "IGa",
            VolFamily::Ga => "Ga",
            VolFamily::Ln => "LN",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    fn fit(self, data: &[f64]) -> Result<FitResult, FitError> {
        match self {
            VolFamily::Giga => fit_gga_giga(data, &GammaSearch::default()),
            VolFamily::Iga => fit_fixed_gamma(data, 1.0, true),
            VolFamily::Ga => fit_fixed_gamma(data, 1.0, false),
            VolFamily::Ln => fit_ln(data),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub tail_lo: f64,
    pub tail_hi: f64,
    pub vol_families: Vec<VolFamily>,
    /// Product menu as (base, fixed exponent).
    pub product_families: Vec<(BaseKind, Option<f64>)>,
    pub simplex: SimplexConfig,
}

impl ReportOptions {
    /// The seven product families, with `gamma` as the fixed exponent of
    /// the constrained GIGa and GGa variants.
    pub fn product_menu(gamma: f64) -> Vec<(BaseKind, Option<f64>)> {
        vec![
            (BaseKind::Giga, None),
            (BaseKind::Giga, Some(gamma)),
            (BaseKind::Iga, None),
            (BaseKind::Ln, None),
            (BaseKind::Gga, None),
            (BaseKind::Ga, None),
            (BaseKind::Gga, Some(gamma)),
        ]
    }
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            tail_lo: 0.9,
            tail_hi: 0.99,
            vol_families: VolFamily::ALL.to_vec(),
            product_families: Self::product_menu(2.0),
            simplex: SimplexConfig::default(),
        }
    }
}

/// Orders fits best-first and fills rel_loglik against `baseline` (which
/// gets exactly 0). Without a successful baseline rel_loglik stays empty.
fn rank(mut fits: Vec<FitResult>, baseline: &str) -> Vec<FitResult> {
    if let Some(base) = fits
        .iter()
        .find(|f| f.family == baseline)
        .map(|f| f.mean_loglik)
    {
        for f in &mut fits {
            f.rel_loglik = Some(if f.family == baseline {
                0.0
            } else {
                f.mean_loglik - base
            });
        }
    }
    fits.sort_by(|a, b| b.mean_loglik.total_cmp(&a.mean_loglik));
    fits
}

fn collect<I: IntoIterator<Item = (String, Result<FitResult, FitError>)>>(
    results: I,
) -> (Vec<FitResult>, Vec<FitFailure>) {
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (family, r) in results {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(FitFailure {
                family,
                error: e.to_string(),
            }),
        }
    }
    (fits, failures)
}

/// Fits the volatility menu to raw levels and adds the right-tail and
/// spectrum diagnostics.
pub fn run_volatility_report(
    frame: &SeriesFrame,
    opts: &ReportOptions,
) -> Result<Report, PipelineError> {
    if frame.kind != SeriesKind::Level {
        return Err(PipelineError::WrongKind {
            expected: SeriesKind::Level,
            got: frame.kind,
        });
    }
    if frame.len() < 50 {
        return Err(PipelineError::TooShort {
            needed: 50,
            got: frame.len(),
        });
    }
    let data = &frame.values;
    let (fits, failures) = collect(
        opts.vol_families
            .iter()
            .map(|f| (f.name().to_string(), f.fit(data))),
    );
    let tail = tail_loglog_fit(data, opts.tail_lo, opts.tail_hi, TailSide::Right)?;
    Ok(Report {
        dataset: frame.name.clone(),
        mode: ReportMode::Volatility,
        units: "index points".into(),
        n_points: data.len(),
        first_date: frame.dates.first().copied(),
        last_date: frame.dates.last().copied(),
        baseline: "LN".into(),
        fits: rank(fits, "LN"),
        failures,
        tail: vec![tail],
        spectrum: spectrum_slope(data).ok(),
        preprocessing: None,
    })
}

/// Detrends and scales returns (from a Level or LogReturn frame), fits the
/// product menu, and adds two-sided tail and spectrum diagnostics.
pub fn run_returns_report(
    frame: &SeriesFrame,
    opts: &ReportOptions,
) -> Result<Report, PipelineError> {
    let pre = match frame.kind {
        SeriesKind::Level => {
            if frame.len() < 300 {
                return Err(PipelineError::TooShort {
                    needed: 300,
                    got: frame.len(),
                });
            }
            preprocess_returns(&frame.values)?
        }
        SeriesKind::LogReturn | SeriesKind::PreprocessedReturn => {
            if frame.len() < 299 {
                return Err(PipelineError::TooShort {
                    needed: 299,
                    got: frame.len(),
                });
            }
            standardize(&frame.values)?
        }
    };
    let z = &pre.returns;
    let n = z.len() as f64;
    let fitted_mean = z.iter().sum::<f64>() / n;
    let fitted_stdev = (z.iter().map(|v| (v - fitted_mean).powi(2)).sum::<f64>() / n).sqrt();
    let (fits, failures) = collect(
        opts.product_families
            .iter()
            .map(|&(base, g)| (base.label(g), fit_product(z, base, g, &opts.simplex))),
    );
    let right = tail_loglog_fit(z, opts.tail_lo, opts.tail_hi, TailSide::Right)?;
    let left = tail_loglog_fit(z, opts.tail_lo, opts.tail_hi, TailSide::LeftAbs)?;
    let baseline = BaseKind::Ln.label(None);
    Ok(Report {
        dataset: frame.name.clone(),
        mode: ReportMode::Returns,
        units: "standardized log-returns".into(),
        n_points: z.len(),
        first_date: frame.dates.get(frame.dates.len() - z.len()).copied(),
        last_date: frame.dates.last().copied(),
        fits: rank(fits, &baseline),
        baseline,
        failures,
        tail: vec![right, left],
        spectrum: spectrum_slope(z).ok(),
        preprocessing: Some(Preprocessing {
            raw_mean: pre.mean,
            raw_stdev: pre.stdev,
            fitted_mean,
            fitted_stdev,
        }),
    })
}
