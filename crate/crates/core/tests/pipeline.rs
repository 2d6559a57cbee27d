mod common;

use std::process::{Command, Output};

use common::fixture;
use gigavol::diag::NoiseColor;
use gigavol::dist::Params;
use gigavol::fit::FittedModel;
use gigavol::pipeline::{
    load_level_csv, run_returns_report, run_volatility_report, to_returns, CsvOptions,
    PipelineError, Report, ReportOptions, SeriesFrame, SeriesKind,
};

fn gigavol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gigavol"))
        .args(args)
        .env_remove("GIGAVOL_OUT_DIR")
        .output()
        .expect("spawn gigavol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cli_simulate_writes_one_row_per_step() {
    let o = gigavol(&[
        "simulate",
        "--kind",
        "giga",
        "--J",
        "0.1",
        "--theta",
        "1",
        "--Sigma",
        "0.3162278",
        "--gamma",
        "1",
        "--steps",
        "1000",
        "--dt",
        "1",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows[0].starts_with("1,") && rows[999].starts_with("1000,"));
}

#[test]
fn cli_simulate_out_respects_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gigavol"))
        .args(["simulate", "--steps", "10", "--out", "path.csv"])
        .env("GIGAVOL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(written.lines().count(), 11);
}

#[test]
fn cli_unknown_flag_is_a_usage_error() {
    let o = gigavol(&["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn cli_data_errors_exit_two() {
    let shuffled = fixture("shuffled.csv");
    let o = gigavol(&["fit-vol", shuffled.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let short = fixture("three_rows.csv");
    assert_eq!(
        gigavol(&["fit-vol", short.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn cli_fit_vol_ranks_giga_first_and_round_trips() {
    let path = fixture("vol_giga.csv");
    let o = gigavol(&["fit-vol", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = Report::from_json(&stdout(&o)).unwrap();
    assert_eq!(report.fits[0].family, "GIGa");
    assert_eq!(report.fit("LN").unwrap().rel_loglik, Some(0.0));
    assert_eq!(
        Report::from_json(&report.to_json().unwrap()).unwrap(),
        report
    );
}

#[test]
fn cli_tails_and_spectrum_emit_json() {
    let path = fixture("prices_giga_n.csv");
    let p = path.to_str().unwrap();
    let tails = gigavol(&[
        "tails",
        p,
        "--returns",
        "--side",
        "left",
        "--lo",
        "0.9",
        "--hi",
        "0.99",
    ]);
    assert_eq!(tails.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&tails)).unwrap();
    assert!(v["slope"].as_f64().unwrap() < 0.0);
    let spec = gigavol(&["spectrum", p, "--returns"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&spec)).unwrap();
    assert_eq!(v["classification"], "White");
}

#[test]
fn volatility_report_rejects_short_series_and_sees_brown_levels() {
    let frame = |values: Vec<f64>| SeriesFrame {
        name: "s".into(),
        dates: Vec::new(),
        values,
        kind: SeriesKind::Level,
    };
    let err = run_volatility_report(&frame(vec![1.0; 10]), &ReportOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::TooShort { .. }), "{err:?}");

    // positive random walk
    let steps = gigavol::dist::DistModel::normal(0.0, 1.0)
        .unwrap()
        .sample(4096, 3);
    let mut level = 200.0;
    let walk: Vec<f64> = steps
        .iter()
        .map(|s| {
            level = f64::max(level + s, 1.0);
            level
        })
        .collect();
    let report = run_volatility_report(&frame(walk), &ReportOptions::default()).unwrap();
    assert_eq!(report.spectrum.unwrap().classification, NoiseColor::Brown);
}

fn alpha_gamma(model: &FittedModel) -> f64 {
    let FittedModel::Product(pm) = model else {
        panic!("not a product")
    };
    match *pm.base().params() {
        Params::Giga { alpha, gamma, .. } => alpha * gamma,
        ref p => panic!("unexpected base {p:?}"),
    }
}

#[test]
fn returns_report_on_synthetic_prices() {
    let frame = load_level_csv(&fixture("prices_giga_n.csv"), &CsvOptions::default())
        .unwrap()
        .frame;
    let opts = ReportOptions::default();
    let report = run_returns_report(&frame, &opts).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.baseline, "LN*N");
    assert_eq!(report.fit("LN*N").unwrap().rel_loglik, Some(0.0));
    let ll = |name: &str| report.fit(name).unwrap().mean_loglik;
    for heavy in ["GIGa*N", "GIGa(gamma=2)*N"] {
        for light in ["Ga*N", "GGa(gamma=2)*N"] {
            assert!(ll(heavy) > ll(light), "{heavy} vs {light}");
        }
    }
    let ag = alpha_gamma(&report.fit("GIGa*N").unwrap().model);
    assert!((2.5..=6.0).contains(&ag), "αγ = {ag}");
    assert_eq!(
        report.spectrum.as_ref().unwrap().classification,
        NoiseColor::White
    );
    let pre = report.preprocessing.as_ref().unwrap();
    assert!(pre.fitted_mean.abs() < 1e-12 && (pre.fitted_stdev - 1.0).abs() < 1e-12);
    assert_eq!(
        Report::from_json(&report.to_json().unwrap()).unwrap(),
        report
    );

    // the same report from an already differenced frame
    let composed = run_returns_report(&to_returns(&frame).unwrap(), &opts).unwrap();
    let cpre = composed.preprocessing.as_ref().unwrap();
    assert!(cpre.fitted_mean.abs() < 1e-12 && (cpre.fitted_stdev - 1.0).abs() < 1e-12);
    assert!((cpre.raw_mean - pre.raw_mean).abs() < 1e-15);
    for fit in &report.fits {
        let other = composed.fit(&fit.family).unwrap();
        assert!(
            (other.mean_loglik - fit.mean_loglik).abs() < 1e-6,
            "{}",
            fit.family
        );
    }
}
