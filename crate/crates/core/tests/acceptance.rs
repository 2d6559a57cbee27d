//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line. Exits non-zero if any criterion fails.
//!
//! Set ACCEPTANCE_ONLY=4,7 to run a subset.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{fixture, geometric_grid, integrate_line, integrate_positive, mean_sd};
use gigavol::diag::{
    giga_scaling_profile, ks_test, spectrum_slope, tail_loglog_fit, NoiseColor, TailSide,
};
use gigavol::dist::{iga_mode_stats, ln_limit_of_giga, DistModel, Params, ReparamLN};
use gigavol::fit::{
    fit_fixed_gamma, fit_gga_giga, fit_ln, fit_product, fit_student_direct, BaseKind, GammaSearch,
    SimplexConfig,
};
use gigavol::product::{student_t_pdf, ProductModel};
use gigavol::quad::QuadratureConfig;
use gigavol::sde::{
    fp_stationary_pdf, mean_sigma_from_variance, relax_mean_estimate, relax_stdev_estimate,
    relaxation_experiment, simulate, stationary_samples, variance_to_vol_params, RelaxConfig,
    RelaxStart, Scheme, SdeSpec, SimConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn iga_process() -> SdeSpec {
    SdeSpec::GigaVol {
        j: 0.1,
        theta: 1.0,
        sigma: 0.1f64.sqrt(),
        gamma: 1.0,
    }
}

fn unit_variance_giga_n() -> ProductModel {
    ProductModel::new(DistModel::giga(1.6, 0.6f64.sqrt(), 2.0).unwrap()).unwrap()
}

fn c1_plug_ins() -> Outcome {
    let law = iga_process().stationary().unwrap();
    let Params::Giga { alpha, beta, gamma } = *law.params() else {
        unreachable!()
    };
    let e7 = (alpha - 3.0)
        .abs()
        .max((beta - 2.0).abs())
        .max((gamma - 1.0).abs());
    let v = variance_to_vol_params(1.0, 2.0, 1.0);
    let e12 = (v.j - 1.0)
        .abs()
        .max((v.theta - 0.5).abs())
        .max((v.sigma - 1.0).abs())
        .max((v.gamma - 2.0).abs());
    let e13 = (mean_sigma_from_variance(0.5, 1.0, 1.0) - std::f64::consts::PI.sqrt() / 2.0).abs();
    let worst = e7.max(e12).max(e13);
    outcome(
        worst <= 1e-10,
        format!("IGa(3,2) err {e7:.1e}, (1,0.5,1,2) err {e12:.1e}, sqrt(pi)/2 err {e13:.1e}"),
    )
}

fn c2_student_t() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0, 5.0] {
        for beta in [0.5, 1.0, 2.0] {
            let pm = ProductModel::new(DistModel::giga(alpha, beta, 2.0).unwrap()).unwrap();
            for k in 0..=2000 {
                let z = -10.0 + 0.01 * k as f64;
                let q = pm.pdf(z, &cfg).unwrap();
                worst = worst.max((q - student_t_pdf(alpha, beta, z)).abs());
            }
        }
    }
    let cauchy = ProductModel::new(DistModel::giga(0.5, 0.5f64.sqrt(), 2.0).unwrap())
        .unwrap()
        .pdf(0.0, &cfg)
        .unwrap();
    let ce = (cauchy - std::f64::consts::FRAC_1_PI).abs();
    outcome(
        worst < 1e-8 && ce <= 1e-10,
        format!("max |quadrature - closed form| {worst:.2e}, Cauchy point err {ce:.1e}"),
    )
}

fn c3_normalization() -> Outcome {
    let dists = [
        DistModel::giga(0.721, 14.1, 3.96),
        DistModel::giga(2.0, 1.0, 0.5),
        DistModel::giga(0.3, 1.0, 4.0),
        DistModel::iga(3.0, 2.0),
        DistModel::iga(0.7, 0.5),
        DistModel::gga(1.5, 2.0, 0.7),
        DistModel::gga(0.8, 1.0, 3.0),
        DistModel::ga(0.5, 1.0),
        DistModel::ga(8.0, 0.125),
        DistModel::ln(0.0, 0.3),
        DistModel::ln(1.0, 1.5),
        DistModel::normal(2.0, 0.5),
        DistModel::student_t(0.0, 1.0, 1.0),
        DistModel::student_t(1.0, 2.0, 3.5),
    ];
    let mut worst: f64 = 0.0;
    for m in dists.iter().map(|m| m.as_ref().unwrap()) {
        let total = if m.family().positive_support() {
            integrate_positive(|x| m.pdf(x), m.mode().max(0.1))
        } else {
            integrate_line(|x| m.pdf(x), m.mode(), 1.0)
        };
        worst = worst.max((total - 1.0).abs());
    }
    let cfg = QuadratureConfig::default();
    let bases = [
        DistModel::giga(1.6, 0.6f64.sqrt(), 2.0),
        DistModel::giga(0.76, 0.32, 3.46),
        DistModel::iga(3.0, 2.0),
        DistModel::gga(0.86, 0.63, 2.0),
        DistModel::ga(0.94, 0.62),
        DistModel::ln(-0.87, 0.55),
    ];
    let mut worst_p: f64 = 0.0;
    for b in bases {
        let pm = ProductModel::new(b.unwrap()).unwrap();
        assert!(pm.variance().is_finite());
        let total = 2.0 * integrate_positive(|z| pm.pdf(z, &cfg).unwrap(), 1.0);
        worst_p = worst_p.max((total - 1.0).abs());
    }
    outcome(
        worst <= 1e-5 && worst_p <= 1e-5,
        format!(
            "{} laws max |1 - integral| {worst:.1e}; 6 products {worst_p:.1e}",
            dists.len()
        ),
    )
}

fn c4_mle_recovery() -> Outcome {
    let data = DistModel::giga(0.721, 14.1, 3.96)
        .unwrap()
        .sample(50_000, 4);
    let giga = fit_gga_giga(&data, &GammaSearch::default()).unwrap();
    let tail = match giga.model {
        gigavol::fit::FittedModel::Dist(m) => match *m.params() {
            Params::Giga { alpha, gamma, .. } => alpha * gamma,
            _ => f64::NAN,
        },
        _ => f64::NAN,
    };
    let truth = 0.721 * 3.96;
    let rel = (tail / truth - 1.0).abs();
    let iga = fit_fixed_gamma(&data, 1.0, true).unwrap().mean_loglik;
    let ln = fit_ln(&data).unwrap().mean_loglik;
    let ga = fit_fixed_gamma(&data, 1.0, false).unwrap().mean_loglik;
    let ranked = giga.mean_loglik >= iga && iga >= ln && ln >= ga;
    outcome(
        rel <= 0.10 && ranked,
        format!(
            "alpha*gamma {tail:.3} vs {truth:.3} ({:.1}%); mean loglik GIGa {:.4} IGa {iga:.4} LN {ln:.4} Ga {ga:.4}",
            100.0 * rel,
            giga.mean_loglik
        ),
    )
}

fn c5_product_cross_check() -> Outcome {
    let data = unit_variance_giga_n().sample(20_000, 5);
    let cfg = SimplexConfig::default();
    let quad = fit_product(&data, BaseKind::Giga, Some(2.0), &cfg).unwrap();
    let direct = fit_student_direct(&data, &cfg).unwrap();
    let diff = (quad.mean_loglik - direct.mean_loglik).abs();
    outcome(
        diff < 1e-3,
        format!(
            "quadrature fit {:.8}, closed form fit {:.8}, |diff| {diff:.2e}",
            quad.mean_loglik, direct.mean_loglik
        ),
    )
}

fn c6_steady_state() -> Outcome {
    let spec = iga_process();
    let law = DistModel::iga(3.0, 2.0).unwrap();
    let samples = stationary_samples(&spec, 0.01, 10_000, 6).unwrap();
    let ks = ks_test(&samples, &law);
    let grid = geometric_grid(0.05, 50.0, 4000);
    let p = fp_stationary_pdf(|x| spec.drift(x), |x| spec.diffusion(x), &grid).unwrap();
    let peak = grid.iter().map(|&x| law.pdf(x)).fold(0.0, f64::max);
    let sup = grid
        .iter()
        .zip(&p)
        .map(|(&x, v)| (v - law.pdf(x)).abs())
        .fold(0.0, f64::max);
    let rel = sup / peak;
    outcome(
        ks.p_value > 0.01 && rel <= 0.01,
        format!(
            "KS p {:.3} (D {:.4}, n 1e4); FP sup-norm {:.2e} of peak",
            ks.p_value, ks.statistic, rel
        ),
    )
}

const RELAX_RUNS: u64 = 30;

fn relax_runs(paths: usize) -> (f64, f64) {
    let times: Vec<f64> = (0..RELAX_RUNS)
        .map(|seed| {
            let mut cfg = RelaxConfig::new(0.1, 0.1f64.sqrt());
            cfg.n_paths = paths;
            cfg.start = RelaxStart::Fixed(1.0);
            cfg.seed = 1000 + seed;
            match relaxation_experiment(&cfg) {
                Ok(r) => r.relax_time,
                Err(_) => cfg.horizon,
            }
        })
        .collect();
    mean_sd(&times)
}

fn c7_relaxation() -> Outcome {
    let mean_target = relax_mean_estimate(0.1, 0.1, 1.0);
    let sd_target = relax_stdev_estimate(0.1, 0.1, 0.25);
    let t = Instant::now();
    let (m, s) = relax_runs(5000);
    let full_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (ms, ss) = relax_runs(500);
    let smoke_secs = t.elapsed().as_secs_f64();
    let within = |v: f64, target: f64, tol: f64| (v / target - 1.0).abs() <= tol;
    let full = within(m, mean_target, 0.20) && within(s, sd_target, 0.30) && full_secs < 600.0;
    let smoke = within(ms, mean_target, 0.35) && within(ss, sd_target, 0.50) && smoke_secs < 60.0;
    outcome(
        full && smoke,
        format!(
            "{RELAX_RUNS} runs x 5000 paths: mean {m:.3} (target {mean_target:.3}), sd {s:.3} (target {sd_target:.3}); \
             500 paths: mean {ms:.3}, sd {ss:.3} ({smoke_secs:.1} s)"
        ),
    )
}

fn c8_tail_bias() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, target) in [(3.0, -2.5), (4.0, -3.0), (5.0, -3.5)] {
        let data = DistModel::iga(alpha, alpha - 1.0)
            .unwrap()
            .sample(100_000, 8);
        let fit = tail_loglog_fit(&data, 0.9, 0.99, TailSide::Right).unwrap();
        pass &= (fit.slope - target).abs() <= 0.3;
        parts.push(format!("alpha {alpha}: {:.3} (target {target})", fit.slope));
    }
    outcome(pass, parts.join(", "))
}

fn c9_noise_color() -> Outcome {
    let cfg = SimConfig {
        dt: 0.01,
        steps: 100_000,
        x0: 1.0,
        seed: 7,
        scheme: Scheme::EulerMaruyama,
    };
    let path = simulate(&iga_process(), &cfg).unwrap();
    let unit_time: Vec<f64> = path.iter().skip(99).step_by(100).copied().collect();
    let vol = spectrum_slope(&unit_time).unwrap();
    let normals = DistModel::normal(0.0, 1.0).unwrap().sample(4096, 9);
    let white = spectrum_slope(&normals).unwrap();
    let returns = spectrum_slope(&unit_variance_giga_n().sample(4096, 9)).unwrap();
    let pass = vol.classification == NoiseColor::Brown
        && (vol.slope + 2.0).abs() <= 0.3
        && white.classification == NoiseColor::White
        && white.slope.abs() <= 0.2
        && returns.classification == NoiseColor::White
        && returns.slope.abs() <= 0.2;
    outcome(
        pass,
        format!(
            "IGa process slope {:.3} ({:?}); i.i.d. normal {:.3} ({:?}); returns {:.3} ({:?})",
            vol.slope,
            vol.classification,
            white.slope,
            white.classification,
            returns.slope,
            returns.classification
        ),
    )
}

fn c10_ln_limit() -> Outcome {
    let (giga, ln) = ln_limit_of_giga(ReparamLN {
        mu: 0.0,
        sigma: 0.3,
        lambda: 0.05,
    })
    .unwrap();
    let sup = (0..=200_000)
        .map(|k| 0.05 + (20.0 - 0.05) * k as f64 / 200_000.0)
        .map(|x| (giga.pdf(x) - ln.pdf(x)).abs())
        .fold(0.0, f64::max);
    // golden-section search for the minimum of the scaled-IGa modal PDF
    let f = |a: f64| iga_mode_stats(a).unwrap().1;
    let (mut lo, mut hi) = (1.5, 10.0);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-9 {
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let a_min = 0.5 * (lo + hi);
    outcome(
        sup < 1e-2 && (a_min - 3.48).abs() <= 0.05,
        format!(
            "sup-norm |GIGa - LN| at lambda 0.05: {sup:.5}; modal-PDF minimum at alpha {a_min:.5}"
        ),
    )
}

fn c11_scaling_locus() -> Outcome {
    let etas = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let s21 = giga_scaling_profile(&etas, 2.1).unwrap();
    let s35 = giga_scaling_profile(&etas, 3.5).unwrap();
    outcome(
        s21 < 0.1 && s35 > s21,
        format!("sup-spread at c = 2.1: {s21:.4}; at c = 3.5: {s35:.4}"),
    )
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_gigavol"))
            .arg("report")
            .arg(fixture("vol_giga.csv"))
            .args(["--mode", "vol", "--out"])
            .arg(&out)
            .env_remove("GIGAVOL_OUT_DIR")
            .status()
            .unwrap();
        (status.code(), std::fs::read(out).unwrap_or_default())
    };
    let (c1, a) = run("a.json");
    let (c2, b) = run("b.json");
    let same = c1 == Some(0) && c2 == Some(0) && !a.is_empty() && a == b;
    outcome(
        same,
        format!(
            "exit codes {c1:?}/{c2:?}, {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "analytic plug-ins", c1_plug_ins, Duration::from_secs(1)),
        (2, "Student-t oracle", c2_student_t, Duration::from_secs(10)),
        (
            3,
            "normalization suite",
            c3_normalization,
            Duration::from_secs(30),
        ),
        (4, "MLE recovery", c4_mle_recovery, Duration::from_secs(60)),
        (
            5,
            "product-fit cross-validation",
            c5_product_cross_check,
            Duration::from_secs(300),
        ),
        (
            6,
            "steady-state simulation",
            c6_steady_state,
            Duration::from_secs(120),
        ),
        (
            7,
            "relaxation experiment",
            c7_relaxation,
            Duration::from_secs(660),
        ),
        (8, "tail-slope bias", c8_tail_bias, Duration::from_secs(60)),
        (9, "noise color", c9_noise_color, Duration::from_secs(30)),
        (
            10,
            "LN limit and modal minimum",
            c10_ln_limit,
            Duration::from_secs(30),
        ),
        (
            11,
            "GIGa scaling locus",
            c11_scaling_locus,
            Duration::from_secs(30),
        ),
        (
            12,
            "end-to-end determinism",
            c12_determinism,
            Duration::from_secs(60),
        ),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= limit;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.1} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
