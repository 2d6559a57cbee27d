mod common;

use common::{integrate_line, integrate_positive, mean_sd};
use gigavol::diag::{ks_test, ks_test_cdf};
use gigavol::dist::{DistModel, Params};
use gigavol::product::ProductModel;
use gigavol::quad::QuadratureConfig;
use gigavol::rng::{standard_normal, stream_rng};
use gigavol::specfun::{lgamma, reg_gamma_q};
use proptest::prelude::*;

fn every_kind() -> Vec<DistModel> {
    vec![
        DistModel::giga(1.3, 2.0, 1.7).unwrap(),
        DistModel::iga(3.0, 2.0).unwrap(),
        DistModel::gga(1.5, 2.0, 0.7).unwrap(),
        DistModel::ga(0.5, 1.0).unwrap(),
        DistModel::ln(0.2, 0.5).unwrap(),
        DistModel::normal(-1.0, 2.0).unwrap(),
        DistModel::student_t(0.5, 1.5, 3.0).unwrap(),
    ]
}

#[test]
fn normalization_over_parameter_grid() {
    for alpha in [0.4, 1.0, 2.5, 6.0] {
        for gamma in [0.5, 1.0, 3.0] {
            for m in [
                DistModel::giga(alpha, 1.5, gamma).unwrap(),
                DistModel::gga(alpha, 1.5, gamma).unwrap(),
            ] {
                let total = integrate_positive(|x| m.pdf(x), 1.5);
                assert!((total - 1.0).abs() < 1e-6, "{m:?}: {total}");
            }
        }
    }
    for (mu, sigma) in [(0.0, 0.1), (1.0, 1.0), (-2.0, 2.5)] {
        let m = DistModel::ln(mu, sigma).unwrap();
        assert!((integrate_positive(|x| m.pdf(x), mu.exp()) - 1.0).abs() < 1e-6);
    }
    for dof in [0.7, 1.0, 4.0, 30.0] {
        let m = DistModel::student_t(0.3, 0.8, dof).unwrap();
        assert!((integrate_line(|x| m.pdf(x), 0.3, 0.8) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn sampler_passes_ks_for_every_kind() {
    for (k, m) in every_kind().iter().enumerate() {
        let draws = m.sample(10_000, 100 + k as u64);
        let ks = ks_test(&draws, m);
        assert!(ks.p_value > 0.01, "{m:?}: {ks:?}");
    }
}

#[test]
fn giga_power_law_tail_constant() {
    for (a, b, g) in [(1.0, 1.0, 1.0), (0.7, 2.0, 3.0), (3.0, 0.5, 0.8)] {
        let m = DistModel::giga(a, b, g).unwrap();
        let x = 100.0 * b;
        let scaled = (m.log_pdf(x) + (1.0 + a * g) * x.ln()).exp();
        let limit = (g.ln() + a * g * b.ln() - lgamma(a).unwrap()).exp();
        // leading correction is of order (β/x)^γ
        let tol = 2.0 * (b / x).powf(g);
        assert!((scaled / limit - 1.0).abs() < tol, "{a} {b} {g}");
    }
}

#[test]
fn product_sampling_matches_product_cdf() {
    let pm = ProductModel::new(DistModel::giga(1.6, 0.6f64.sqrt(), 2.0).unwrap()).unwrap();
    let base = pm.base().sample(10_000, 21);
    let mut rng = stream_rng(22, 0);
    let z: Vec<f64> = base.iter().map(|s| s * standard_normal(&mut rng)).collect();
    let cfg = QuadratureConfig::default();
    let ks = ks_test_cdf(&z, |v| pm.cdf(v, &cfg).unwrap());
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn product_variance_matches_monte_carlo() {
    // αγ = 6 > 4 keeps the fourth moment finite
    let pm = ProductModel::new(DistModel::giga(3.0, 1.0, 2.0).unwrap()).unwrap();
    let z = pm.sample(100_000, 23);
    let sq: Vec<f64> = z.iter().map(|v| v * v).collect();
    let (m, sd) = mean_sd(&sq);
    let se = sd / (sq.len() as f64).sqrt();
    assert!(
        (m - pm.variance()).abs() < 3.0 * se,
        "{m} vs {}",
        pm.variance()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gamma_one_embeddings(alpha in 0.2f64..8.0, beta in 0.1f64..10.0, t in 0.05f64..5.0) {
        let x = t * beta;
        let pairs = [
            (DistModel::iga(alpha, beta).unwrap(), DistModel::giga(alpha, beta, 1.0).unwrap()),
            (DistModel::ga(alpha, beta).unwrap(), DistModel::gga(alpha, beta, 1.0).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!((a.pdf(x) - b.pdf(x)).abs() <= 1e-12 * a.pdf(x).max(1e-300).max(1.0));
            prop_assert!((a.cdf(x) - b.cdf(x)).abs() <= 1e-12);
            match (a.mean_var(), b.mean_var()) {
                (Ok((m1, v1)), Ok((m2, v2))) => {
                    prop_assert!((m1 - m2).abs() <= 1e-12 * m1.abs().max(1.0));
                    prop_assert!(v1 == v2 || (v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "mean_var disagrees"),
            }
        }
    }

    #[test]
    fn cdf_derivative_is_pdf(alpha in 0.5f64..5.0, beta in 0.5f64..3.0, gamma in 0.5f64..3.0, q in 0.1f64..0.9) {
        for m in [DistModel::giga(alpha, beta, gamma).unwrap(), DistModel::gga(alpha, beta, gamma).unwrap()] {
            // interior point near the q-quantile region of the scale
            let x = beta * (0.3 + 2.0 * q);
            let h = 1e-5 * x;
            let fd = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
            prop_assert!((fd - m.pdf(x)).abs() < 1e-4, "{:?} at {}", m.params(), x);
        }
    }

    #[test]
    fn q_is_monotone(s in 0.1f64..20.0, x in 0.0f64..40.0, dx in 0.0f64..5.0) {
        prop_assert!(reg_gamma_q(s, x + dx).unwrap() <= reg_gamma_q(s, x).unwrap() + 1e-15);
    }

    #[test]
    fn unit_mean_scaling_has_unit_mean(alpha in 1.2f64..8.0, beta in 0.1f64..20.0, gamma in 0.6f64..4.0) {
        let m = DistModel::giga(alpha, beta, gamma).unwrap();
        if let Ok(u) = m.scaled_to_unit_mean() {
            prop_assert!((u.mean_var().unwrap().0 - 1.0).abs() < 1e-10);
            let Params::Giga { alpha: a2, gamma: g2, .. } = *u.params() else { unreachable!() };
            prop_assert_eq!((a2, g2), (alpha, gamma));
        }
    }

    #[test]
    fn json_round_trip(alpha in 0.1f64..10.0, beta in 0.01f64..100.0, gamma in 0.1f64..8.0) {
        let m = DistModel::giga(alpha, beta, gamma).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<DistModel>(&text).unwrap(), m);
    }
}
