//! Gauss–Legendre quadrature and an adaptive Runge–Kutta integrator.

/// Gauss–Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on Legendre polynomials; exact for polynomials of
/// degree <= 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_pair(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Value and derivative of P_n at x by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

/// Integrate f over [a, b] with `panels` 16-point Gauss–Legendre panels.
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x16, w16) = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for (xi, wi) in x16.iter().zip(&w16) {
            acc += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Result of an adaptive ODE integration.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    /// Accepted step abscissae, including both endpoints.
    pub ts: Vec<f64>,
    /// States at the abscissae.
    pub ys: Vec<Vec<f64>>,
    /// Derivatives at the abscissae (for Hermite interpolation).
    pub dys: Vec<Vec<f64>>,
}

impl OdeSolution {
    /// Cubic Hermite interpolation of the stored solution.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.ys[0].clone();
        }
        if t >= self.ts[n - 1] {
            return self.ys[n - 1].clone();
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.ts[hi] - self.ts[lo];
        let s = (t - self.ts[lo]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        (0..self.ys[0].len())
            .map(|k| {
                h00 * self.ys[lo][k]
                    + h10 * h * self.dys[lo][k]
                    + h01 * self.ys[hi][k]
                    + h11 * h * self.dys[hi][k]
            })
            .collect()
    }
}

/// Error from the adaptive integrator.
#[derive(Debug, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (rtol = {rtol})")]
    StepUnderflow { t: f64, rtol: f64 },
    #[error("step budget exhausted after {steps} steps at t = {t}")]
    TooManySteps { steps: usize, t: f64 },
}

/// Dormand–Prince 5(4) with PI step control.
///
/// Integrates dy/dt = f(t, y) from t0 to t1 (t1 > t0) and keeps all accepted
/// steps for dense output.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<OdeSolution, OdeError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = f(t, &y);
    let mut h = ((t1 - t0) * 1e-4).max(1e-12);
    let mut err_old: f64 = 1e-4;

    let mut ts = vec![t0];
    let mut ys = vec![y.clone()];
    let mut dys = vec![k1.clone()];

    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(OdeError::TooManySteps { steps, t });
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let y2: Vec<f64> = (0..dim).map(|i| y[i] + h * A21 * k1[i]).collect();
        let k2 = f(t + h / 5.0, &y2);
        let y3: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i]))
            .collect();
        let k3 = f(t + 3.0 * h / 10.0, &y3);
        let y4: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]))
            .collect();
        let k4 = f(t + 4.0 * h / 5.0, &y4);
        let y5: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]))
            .collect();
        let k5 = f(t + 8.0 * h / 9.0, &y5);
        let y6: Vec<f64> = (0..dim)
            .map(|i| {
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            })
            .collect();
        let k6 = f(t + h, &y6);
        let ynew: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]))
            .collect();
        let k7 = f(t + h, &ynew);

        let mut err: f64 = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / dim as f64).sqrt().max(1e-30);

        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = k7;
            ts.push(t);
            ys.push(y.clone());
            dys.push(k1.clone());
            let fac = 0.9 * err.powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 8.0);
            err_old = err;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < 1e-14 * (t1 - t0) {
                return Err(OdeError::StepUnderflow { t, rtol });
            }
        }
    }
    Ok(OdeSolution { ts, ys, dys })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exactness() {
        // 5-node rule integrates x^8 on [-1,1] exactly: 2/9.
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14, "got {s}");
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gl_large_n() {
        let (x, w) = gauss_legendre(64);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * (xi * 3.0).cos()).sum();
        let exact = 2.0 * (3.0f64).sin() / 3.0;
        assert!((s - exact).abs() < 1e-13);
    }

    #[test]
    fn dopri_exponential() {
        let sol = dopri5(|_, y| vec![y[0]], 0.0, 1.0, &[1.0], 1e-12, 1e-14).unwrap();
        let end = sol.ys.last().unwrap()[0];
        assert!((end - std::f64::consts::E).abs() < 1e-10);
        // dense output mid-way
        let mid = sol.eval(0.5)[0];
        assert!((mid - 0.5f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn dopri_oscillator() {
        let sol = dopri5(
            |_, y| vec![y[1], -y[0]],
            0.0,
            10.0,
            &[1.0, 0.0],
            1e-12,
            1e-14,
        )
        .unwrap();
        let end = sol.ys.last().unwrap();
        assert!((end[0] - 10.0f64.cos()).abs() < 1e-9);
        assert!((end[1] + 10.0f64.sin()).abs() < 1e-9);
    }
}
