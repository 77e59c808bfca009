//! Shared numerical kernels: monotone cubic interpolation, tridiagonal
//! solves (open and periodic), Simpson quadrature and least squares.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("tridiagonal solve breakdown at row {row} (pivot {pivot:.3e})")]
    SolveBreakdown { row: usize, pivot: f64 },
    #[error("interpolation abscissae must be strictly increasing (row {0})")]
    NonMonotoneAbscissae(usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

/// Shape-preserving cubic spline (Fritsch–Carlson slope limiting).
///
/// Reproduces straight-line data exactly and never overshoots, which is
/// what we want when redistributing nodes along a polyline.
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, NumericsError> {
        let n = xs.len();
        if n < 2 {
            return Err(NumericsError::TooFewPoints { need: 2, got: n });
        }
        for i in 1..n {
            if xs[i] <= xs[i - 1] {
                return Err(NumericsError::NonMonotoneAbscissae(i));
            }
        }
        let slopes = fritsch_carlson_slopes(&xs, &ys);
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.slopes[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.xs[n - 1]);
        }
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut h = vec![0.0; n - 1];
    let mut delta = vec![0.0; n - 1];
    for i in 0..n - 1 {
        h[i] = xs[i + 1] - xs[i];
        delta[i] = (ys[i + 1] - ys[i]) / h[i];
    }
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            // Weighted harmonic mean keeps the interpolant monotone.
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Endpoint limiting (three-point estimate, clamped).
    if n > 2 {
        d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    d
}

fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Thomas algorithm for a tridiagonal system with Dirichlet-style layout:
/// `sub[i]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
pub fn solve_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, NumericsError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < 1e-300 {
        return Err(NumericsError::SolveBreakdown { row: 0, pivot });
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() < 1e-300 {
            return Err(NumericsError::SolveBreakdown { row: i, pivot });
        }
        if i < n - 1 {
            c[i] = sup[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Periodic tridiagonal solve via the Sherman–Morrison correction.
/// `corner_lo` couples row 0 to x[n-1]; `corner_hi` couples row n-1 to x[0].
pub fn solve_cyclic_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    corner_lo: f64,
    corner_hi: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, NumericsError> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut diag_mod = diag.to_vec();
    diag_mod[0] -= gamma;
    diag_mod[n - 1] -= corner_lo * corner_hi / gamma;
    let y = solve_tridiagonal(sub, &diag_mod, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner_hi;
    let z = solve_tridiagonal(sub, &diag_mod, sup, &u)?;
    let factor = (y[0] + corner_lo * y[n - 1] / gamma)
        / (1.0 + z[0] + corner_lo * z[n - 1] / gamma);
    Ok((0..n).map(|i| y[i] - factor * z[i]).collect())
}

/// Composite Simpson rule over a uniform grid (values.len() must be odd).
pub fn simpson_uniform(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd point count");
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * step / 3.0
}

/// Least-squares line fit; returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_cubic_reproduces_lines() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
        let sp = MonotoneCubic::new(xs, ys).unwrap();
        for k in 0..90 {
            let x = k as f64 * 0.1;
            assert!((sp.eval(x) - (3.0 * x - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_cubic_no_overshoot() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 0.0, 1.0, 1.0];
        let sp = MonotoneCubic::new(xs, ys).unwrap();
        for k in 0..=300 {
            let v = sp.eval(k as f64 * 0.01);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn tridiagonal_roundtrip() {
        let n = 50;
        let sub = vec![-1.0; n];
        let diag = vec![3.0; n];
        let sup = vec![-1.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 3.0 * x_true[i];
            if i > 0 {
                rhs[i] -= x_true[i - 1];
            }
            if i < n - 1 {
                rhs[i] -= x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_tridiagonal_roundtrip() {
        let n = 40;
        let sub = vec![-1.0; n];
        let diag = vec![3.5; n];
        let sup = vec![-1.0; n];
        let (clo, chi) = (-1.0, -1.0);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.61).cos()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let prev = x_true[(i + n - 1) % n];
            let next = x_true[(i + 1) % n];
            rhs[i] = 3.5 * x_true[i] - prev - next;
        }
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, clo, chi, &rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let n = 11;
        let step = 0.1;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * step;
                x * x * x - 2.0 * x
            })
            .collect();
        let exact = 0.25 - 1.0; // integral over [0,1]
        assert!((simpson_uniform(&values, step) - exact).abs() < 1e-14);
    }
}
