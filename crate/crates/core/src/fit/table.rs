//! Cubic-spline table of an even log-density on a uniform grid in
//! t = asinh(|z|). Used inside product-fit objectives, where evaluating the
//! quadrature once per datum per simplex step would dominate the run time.

pub(crate) struct EvenLogTable {
    t0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl EvenLogTable {
    /// Tabulates `f` at `nodes` points on t ∈ [0, T] with T a little past
    /// asinh(z_max), mirrors them onto t < 0 and fits a natural spline.
    pub fn build<E, F: FnMut(f64) -> Result<f64, E>>(
        mut f: F,
        z_max: f64,
        nodes: usize,
    ) -> Result<Self, E> {
        let nodes = nodes.max(4);
        let t_max = 1.05 * z_max.abs().asinh() + 0.05;
        let h = t_max / (nodes - 1) as f64;
        let mut half = Vec::with_capacity(nodes);
        for k in 0..nodes {
            half.push(f((k as f64 * h).sinh())?);
        }
        let y: Vec<f64> = half[1..].iter().rev().chain(half.iter()).copied().collect();
        let m = natural_second_derivatives(&y, h);
        Ok(Self {
            t0: -t_max,
            h,
            y,
            m,
        })
    }

    #[cfg(test)]
    pub fn eval(&self, z: f64) -> f64 {
        self.eval_t(z.abs().asinh())
    }

    /// Value at t = asinh(|z|), t ≥ 0.
    pub fn eval_t(&self, t: f64) -> f64 {
        let last = self.y.len() - 2;
        let i = (((t - self.t0) / self.h).floor() as usize).min(last);
        let b = (t - self.t0) / self.h - i as f64;
        let a = 1.0 - b;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * self.h * self.h
                / 6.0
    }
}

/// Second derivatives of the natural cubic spline through equally spaced
/// values `y` (Thomas algorithm on the tridiagonal system).
fn natural_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut c = vec![0.0; inner];
    let mut d = vec![0.0; inner];
    let scale = 6.0 / (h * h);
    for i in 0..inner {
        let rhs = scale * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        let denom = if i == 0 { 4.0 } else { 4.0 - c[i - 1] };
        c[i] = 1.0 / denom;
        d[i] = if i == 0 {
            rhs / denom
        } else {
            (rhs - d[i - 1]) / denom
        };
    }
    for i in (0..inner).rev() {
        m[i + 1] = if i + 1 == inner {
            d[i]
        } else {
            d[i] - c[i] * m[i + 2]
        };
    }
    m
}
