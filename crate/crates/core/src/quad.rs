//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("quadrature did not converge: estimate {estimate}, achieved error {achieved_error} after {subdivisions} subdivisions")]
pub struct QuadratureError {
    pub estimate: f64,
    pub achieved_error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` equal panels
/// and bisecting the panel with the largest error estimate until the global
/// error estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut segs: Vec<Segment> = (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            gk15(&mut f, lo, hi)
        })
        .collect();
    let mut subdivisions = 0;
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        if subdivisions >= cfg.max_subdivisions || !err.is_finite() {
            return Err(QuadratureError {
                estimate: total,
                achieved_error: err,
                subdivisions,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segs.push(gk15(&mut f, s.a, mid));
        segs.push(gk15(&mut f, mid, s.b));
        subdivisions += 1;
    }
}

/// Integral over the whole real line of `exp(log_f(u))` where `log_f` is
/// concave (a single log-concave bump). Returns the natural log of the
/// integral so that very small values do not underflow.
///
/// The peak is located by golden-section search, the integration window is
/// extended until the integrand has dropped by `exp(-DROP)` on both sides and
/// the remaining finite integral is evaluated on the peak-normalized integrand.
pub fn ln_integrate_log_concave<F: FnMut(f64) -> f64>(
    mut log_f: F,
    guess: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    const DROP: f64 = 46.0;
    let (peak_u, peak) = maximize_concave(&mut log_f, guess);
    if !peak.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let lo = walk_until_drop(&mut log_f, peak_u, peak, -1.0, DROP);
    let hi = walk_until_drop(&mut log_f, peak_u, peak, 1.0, DROP);
    let value = integrate(|u| (log_f(u) - peak).exp(), lo, hi, 4, cfg)?;
    Ok(peak + value.ln())
}

fn walk_until_drop<F: FnMut(f64) -> f64>(
    log_f: &mut F,
    from: f64,
    peak: f64,
    dir: f64,
    drop: f64,
) -> f64 {
    let mut step = 0.25;
    let mut u = from;
    for _ in 0..200 {
        u += dir * step;
        if !(log_f(u) > peak - drop) {
            return u;
        }
        step *= 1.5;
    }
    u
}

/// Maximizes a concave function of one variable: bracket by expanding steps,
/// then golden-section search.
fn maximize_concave<F: FnMut(f64) -> f64>(f: &mut F, guess: f64) -> (f64, f64) {
    let score = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut b = guess;
    let mut fb = score(f(b));
    let mut step = 0.5;
    let mut a = b - step;
    let mut fa = score(f(a));
    let mut c = b + step;
    let mut fc = score(f(c));
    let mut guard = 0;
    while !(fb >= fa && fb >= fc) && guard < 200 {
        step *= 1.6;
        if fa > fc {
            c = b;
            fc = fb;
            b = a;
            fb = fa;
            a = b - step;
            fa = score(f(a));
        } else {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = b + step;
            fc = score(f(c));
        }
        guard += 1;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = score(f(x1));
    let mut f2 = score(f(x2));
    while hi - lo > 1e-6 * (1.0 + b.abs()) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = score(f(x2));
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = score(f(x1));
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
