use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::Serialize;

use super::MellinError;
use crate::Complex64;

/// Tail size, relative to the peak, that a sampled function must reach at the grid ends.
pub const TAIL_TOL: f64 = 1e-12;

/// Samples of `(Mu)(lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MellinSamples {
    pub lambdas: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl MellinSamples {
    /// `int |Mu|^2 dlambda` by the rectangle rule on the uniform lambda grid.
    pub fn norm_sq(&self) -> f64 {
        if self.lambdas.len() < 2 {
            return 0.0;
        }
        let dl = self.lambdas[1] - self.lambdas[0];
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dl
    }
}

fn uniform_step(t: &[f64]) -> Result<f64, MellinError> {
    if t.len() < 4 {
        return Err(MellinError::Grid(format!("need at least 4 log-grid points, got {}", t.len())));
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(h > 0.0) || !h.is_finite() {
        return Err(MellinError::Grid("log grid must increase".into()));
    }
    for (j, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
            return Err(MellinError::Grid(format!("log grid not uniform at index {j}")));
        }
    }
    Ok(h)
}

/// `g(t) = e^{t/2} u(e^t)`, checked for decay at both ends.
fn weighted(t: &[f64], u: &[Complex64]) -> Result<Vec<Complex64>, MellinError> {
    if u.len() != t.len() {
        return Err(MellinError::Grid(format!("{} samples for {} grid points", u.len(), t.len())));
    }
    let g: Vec<Complex64> = t.iter().zip(u).map(|(t, u)| u * (0.5 * t).exp()).collect();
    check_tails(&g, "u")?;
    Ok(g)
}

fn check_tails(g: &[Complex64], what: &str) -> Result<(), MellinError> {
    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if !peak.is_finite() {
        return Err(MellinError::Grid(format!("{what} has non-finite samples")));
    }
    let ends = g[0].norm().max(g[g.len() - 1].norm());
    if peak > 0.0 && ends > TAIL_TOL * peak {
        return Err(MellinError::Grid(format!("{what} does not decay at the grid ends ({ends:e} vs peak {peak:e})")));
    }
    Ok(())
}

/// `(Mu)(lambda) = (2 pi)^{-1/2} int x^{-1/2 - i lambda} u(x) dx` on the FFT frequency grid.
///
/// `t` is a uniform grid in `ln x` and `u[j] = u(e^{t[j]})`. The output grid is
/// `2 pi k / (N h)` for `k = -N/2 .. N/2 - 1`.
pub fn mellin_transform(t: &[f64], u: &[Complex64]) -> Result<MellinSamples, MellinError> {
    let h = uniform_step(t)?;
    let mut buf = weighted(t, u)?;
    let n = buf.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = h / (2.0 * PI).sqrt();
    let half = n / 2;
    let mut lambdas = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        let k = m as i64 - half as i64;
        let lam = 2.0 * PI * k as f64 / (n as f64 * h);
        let idx = k.rem_euclid(n as i64) as usize;
        lambdas.push(lam);
        values.push(buf[idx] * Complex64::from_polar(norm, -lam * t[0]));
    }
    Ok(MellinSamples { lambdas, values })
}

/// `(Mu)(lambda)` at arbitrary `lambda` inside the Nyquist band, by direct summation.
pub fn mellin_transform_at(t: &[f64], u: &[Complex64], lambdas: &[f64]) -> Result<Vec<Complex64>, MellinError> {
    let h = uniform_step(t)?;
    let g = weighted(t, u)?;
    let nyquist = PI / h;
    if let Some(l) = lambdas.iter().find(|l| l.abs() > nyquist || !l.is_finite()) {
        return Err(MellinError::Grid(format!("lambda = {l} beyond the grid's Nyquist limit {nyquist}")));
    }
    Ok(lambdas.iter().map(|&l| fourier_sum(t, &g, h, l) / (2.0 * PI).sqrt()).collect())
}

/// `h sum_j g_j e^{-i lambda t_j}`.
fn fourier_sum(t: &[f64], g: &[Complex64], h: f64, lambda: f64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (tj, gj) in t.iter().zip(g) {
        if gj.re != 0.0 || gj.im != 0.0 {
            s += gj * Complex64::from_polar(1.0, -lambda * tj);
        }
    }
    s * h
}

/// Uniform `ln x` grid on which the test function is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolutionGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for ConvolutionGrid {
    fn default() -> Self {
        ConvolutionGrid { t_min: -12.0, t_max: 12.0, points: 481 }
    }
}

/// `| int int b(xy) u(y) conj(u(x)) dx dy - int beta(lambda) (Mu)(-lambda) conj((Mu)(lambda)) dlambda |`.
///
/// The left side is a 2-D rule on the `ln x` grid, the right side a 1-D rule in
/// `lambda` with `beta(lambda) = int b(t) t^{-1/2 - i lambda} dt` computed separately.
pub fn verify_convolution<B, U>(b: B, u: U, grid: &ConvolutionGrid) -> Result<f64, MellinError>
where
    B: Fn(f64) -> f64,
    U: Fn(f64) -> Complex64,
{
    if grid.points < 4 || !(grid.t_max > grid.t_min) {
        return Err(MellinError::Grid(format!("bad convolution grid {grid:?}")));
    }
    let n = grid.points;
    let h = (grid.t_max - grid.t_min) / (n - 1) as f64;
    let t: Vec<f64> = (0..n).map(|j| grid.t_min + j as f64 * h).collect();
    let u_samples: Vec<Complex64> = t.iter().map(|t| u(t.exp())).collect();
    let g = weighted(&t, &u_samples)?;
    if g.iter().all(|v| v.norm() == 0.0) {
        return Ok(0.0);
    }
    let b1 = |tau: f64| (0.5 * tau).exp() * b(tau.exp());

    // 2-D side: the kernel depends on t_j + t_k only
    let hankel: Vec<f64> = (0..2 * n - 1).map(|s| b1(2.0 * grid.t_min + s as f64 * h)).collect();
    let mut lhs = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for k in 0..n {
            row += g[k] * hankel[j + k];
        }
        lhs += row * g[j].conj();
    }
    lhs *= h * h;

    // 1-D side
    let (lo, hi) = kernel_window(&b1, 2.0 * grid.t_min, 2.0 * grid.t_max, h)?;
    let m = ((hi - lo) / h).round() as usize + 1;
    let tau: Vec<f64> = (0..m).map(|k| lo + k as f64 * h).collect();
    let bvals: Vec<Complex64> = tau.iter().map(|&x| Complex64::new(b1(x), 0.0)).collect();
    if bvals.iter().all(|v| v.re == 0.0) {
        return Ok(lhs.norm());
    }
    let nyquist = PI / h;
    let dl = 2.0 * PI / ((hi - lo) + 2.0 * (grid.t_max - grid.t_min));
    let nl = (nyquist / dl).floor() as i64;
    let inv = 1.0 / (2.0 * PI).sqrt();
    let edge = fourier_sum(&t, &g, h, nl as f64 * dl).norm() * inv;
    let peak = (-nl..=nl)
        .step_by((nl as usize / 50).max(1))
        .map(|k| fourier_sum(&t, &g, h, k as f64 * dl).norm() * inv)
        .fold(0.0f64, f64::max);
    if edge > 1e-8 * peak {
        return Err(MellinError::Grid("Mellin transform of u not resolved by the grid".into()));
    }
    let mut rhs = Complex64::new(0.0, 0.0);
    for k in -nl..=nl {
        let lam = k as f64 * dl;
        let beta = fourier_sum(&tau, &bvals, h, lam);
        let mp = fourier_sum(&t, &g, h, lam) * inv;
        let mm = fourier_sum(&t, &g, h, -lam) * inv;
        rhs += beta * mm * mp.conj();
    }
    rhs *= dl;
    Ok((lhs - rhs).norm())
}

/// Extends `[lo, hi]` outward until `b1` has decayed at both ends.
fn kernel_window<F: Fn(f64) -> f64>(b1: &F, mut lo: f64, mut hi: f64, h: f64) -> Result<(f64, f64), MellinError> {
    let peak = |a: f64, c: f64| {
        let k = ((c - a) / h).ceil() as usize;
        (0..=k).map(|i| b1(a + i as f64 * h).abs()).fold(0.0f64, f64::max)
    };
    let mut top = peak(lo, hi);
    let tail = |x: f64| (0..8).map(|i| b1(x + i as f64 * h).abs()).fold(0.0f64, f64::max);
    while tail(lo - 8.0 * h) > 1e-13 * top.max(f64::MIN_POSITIVE) {
        if lo < -400.0 {
            return Err(MellinError::Grid("kernel b does not decay as t -> 0".into()));
        }
        lo -= 4.0;
        top = top.max(peak(lo, lo + 4.0));
    }
    while tail(hi) > 1e-13 * top.max(f64::MIN_POSITIVE) {
        if hi > 400.0 {
            return Err(MellinError::Grid("kernel b does not decay as t -> inf".into()));
        }
        hi += 4.0;
        top = top.max(peak(hi - 4.0, hi));
    }
    let lo = hi - ((hi - lo) / h).ceil() * h;
    Ok((lo, hi))
}
