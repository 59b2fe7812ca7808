use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::{KernelSpec, MellinError};
use crate::quad::{gl16, gl8};
use crate::specfun::{log_gamma, SpecfunError};
use crate::{Complex64, Scalar};

/// Distance from a pole line `Re z = r_n + 1/2` inside which quadrature refuses.
pub const POLE_PROXIMITY: f64 = 1e-6;

/// Half-periods of the Bessel phase integrated before averaging.
const HALF_PERIODS: usize = 400;
/// Partial sums entering the final averaging.
const AVERAGED_SUMS: usize = 8;

/// Closed-form symbol `2^{q-z-1/2} Gamma((p+q-z+1/2)/2) / Gamma((p-q+z+3/2)/2)` of `t^q J_p(t)`.
///
/// The numerator poles `z = p+q+1/2+2k` are errors; denominator poles give zeros.
pub fn mellin_symbol_bessel<T: Scalar>(p: T, q: T, z: Complex<T>) -> Result<Complex<T>, MellinError> {
    let half = T::lit(0.5);
    let a = (-z + (p + q + half)) * half;
    let b = (z + (p - q + T::lit(1.5))) * half;
    let la = log_gamma(a)?;
    let lb = match log_gamma(b) {
        Ok(v) => v,
        Err(SpecfunError::Pole { .. }) => return Ok(Complex::new(T::zero(), T::zero())),
        Err(e) => return Err(e.into()),
    };
    let ln2 = T::LN_2();
    Ok(((-z + (q - half)) * ln2 + la - lb).exp())
}

fn check_band(kernel: &KernelSpec, z: Complex64) -> Result<(), MellinError> {
    let limit = kernel.band_limit();
    if !(z.re > 0.0 && z.re < limit) || !z.im.is_finite() {
        return Err(MellinError::Band { re: z.re, limit });
    }
    let mut k = 0;
    while let Some((r, _)) = kernel.term(k) {
        let pole = r + 0.5;
        if (z.re - pole).abs() < POLE_PROXIMITY {
            return Err(MellinError::PoleProximity { re: z.re, pole, tol: POLE_PROXIMITY });
        }
        if pole > z.re + 1.0 {
            break;
        }
        k += 1;
    }
    Ok(())
}

/// `int_0^inf v(t) t^{-1/2-z} dt`, continued across the pole lines.
///
/// On `(0, 1)` the expansion terms with `r_k + 1/2 < Re z + 1` are subtracted and
/// their contributions `-v_k / (z - r_k - 1/2)` added back. On `(1, inf)` a Bessel
/// kernel is integrated over half-periods of its phase and the last partial sums
/// are averaged.
pub fn mellin_symbol_quadrature(kernel: &KernelSpec, z: Complex64) -> Result<Complex64, MellinError> {
    check_band(kernel, z)?;
    if kernel.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut n_sub = 0;
    while let Some((r, _)) = kernel.term(n_sub) {
        if r + 0.5 >= z.re + 1.0 {
            break;
        }
        n_sub += 1;
    }
    let mut poles = Complex64::new(0.0, 0.0);
    for k in 0..n_sub {
        let (r, v) = kernel.term(k).expect("counted above");
        poles += v / (Complex64::new(r + 0.5, 0.0) - z);
    }
    let rate = kernel.exponent_after(n_sub) + 0.5 - z.re;
    let near = inner_integral(kernel, z, n_sub, rate)?;
    let far = match kernel {
        KernelSpec::BesselPQ { p, q } => oscillatory_tail(*p, *q, z),
        KernelSpec::Tabulated(_) => compact_tail(kernel, z),
    };
    Ok(near + poles + far)
}

/// `int_0^1 R_n(t) t^{-1/2-z} dt` in the variable `t = e^{-s}`.
fn inner_integral(kernel: &KernelSpec, z: Complex64, n_sub: usize, rate: f64) -> Result<Complex64, MellinError> {
    if !(rate > 0.0) {
        return Err(MellinError::Band { re: z.re, limit: kernel.band_limit() });
    }
    let s_max = (40.0 / rate).min(2.0e4);
    let width = 0.5f64.min(1.0 / (1.0 + z.im.abs()));
    let panels = (s_max / width).ceil() as usize;
    let width = s_max / panels as f64;
    let rule = gl16();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let a = k as f64 * width;
        for (s, w) in rule.points(a, a + width) {
            let rem = kernel.remainder((-s).exp(), n_sub);
            if rem == 0.0 {
                continue;
            }
            acc += Complex64::from_polar(w * rem * (s * (z.re - 0.5)).exp(), s * z.im);
        }
    }
    Ok(acc)
}

/// `t^{-1/2-z}`.
fn power(t: f64, z: Complex64) -> Complex64 {
    let lt = t.ln();
    Complex64::from_polar((-(0.5 + z.re) * lt).exp(), -z.im * lt)
}

fn oscillatory_tail(p: f64, q: f64, z: Complex64) -> Complex64 {
    let phase0 = (2.0 * p + 1.0) * PI / 4.0;
    let mut m = ((1.0 - phase0) / PI).ceil();
    if phase0 + m * PI <= 1.0 + 1e-9 {
        m += 1.0;
    }
    let first = phase0 + m * PI;
    let rule = gl16();
    let f = |t: f64| power(t, z) * super::bessel_pq(p, q, t);
    let panel = |a: f64, b: f64| rule.points(a, b).map(|(t, w)| f(t) * w).sum::<Complex64>();
    let mut s = panel(1.0, first);
    let mut sums = Vec::with_capacity(HALF_PERIODS);
    for j in 0..HALF_PERIODS {
        let a = first + j as f64 * PI;
        s += panel(a, a + PI);
        sums.push(s);
    }
    let mut tail: Vec<Complex64> = sums[HALF_PERIODS - AVERAGED_SUMS..].to_vec();
    while tail.len() > 1 {
        tail = tail.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
    }
    tail[0]
}

fn compact_tail(kernel: &KernelSpec, z: Complex64) -> Complex64 {
    let KernelSpec::Tabulated(tab) = kernel else { unreachable!("tabulated kernels only") };
    let (ts, _) = tab.samples();
    let rule = gl8();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut add = |a: f64, b: f64| {
        if b > a {
            acc += rule.points(a, b).map(|(t, w)| power(t, z) * kernel.value(t) * w).sum::<Complex64>();
        }
    };
    // below the first sample v follows the expansion
    if ts[0] > 1.0 {
        let panels = (ts[0] - 1.0).ceil() as usize * 4;
        let h = (ts[0] - 1.0) / panels as f64;
        for k in 0..panels {
            add(1.0 + k as f64 * h, 1.0 + (k + 1) as f64 * h);
        }
    }
    for w in ts.windows(2) {
        add(w[0].max(1.0), w[1]);
    }
    acc
}

/// Residue of the symbol at `r_n + 1/2`, from symmetric difference quotients
/// `(h B(z_n + h) - h B(z_n - h)) / 2` extrapolated in `h^2`.
pub fn residue_at_pole(kernel: &KernelSpec, n: usize) -> Result<f64, MellinError> {
    let (r, _) = kernel
        .term(n)
        .ok_or_else(|| MellinError::Domain(format!("pole index {n} beyond the known expansion")))?;
    let zn = r + 0.5;
    let mut gap = zn.min(kernel.band_limit() - zn);
    if n > 0 {
        gap = gap.min(zn - (kernel.term(n - 1).expect("earlier term").0 + 0.5));
    }
    if let Some((r1, _)) = kernel.term(n + 1) {
        gap = gap.min(r1 + 0.5 - zn);
    }
    let h0 = 0.25f64.min(gap / 4.0);
    let levels = 5;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let h = h0 / 2f64.powi(i as i32);
        let up = mellin_symbol_quadrature(kernel, Complex64::new(zn + h, 0.0))?;
        let down = mellin_symbol_quadrature(kernel, Complex64::new(zn - h, 0.0))?;
        let mut row = vec![0.5 * h * (up.re - down.re)];
        for j in 1..=i {
            let f = 4f64.powi(j as i32);
            let prev = &table[i - 1];
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (f - 1.0));
        }
        table.push(row);
    }
    let best = table[levels - 1][levels - 1];
    let residual = (best - table[levels - 2][levels - 2]).abs();
    if residual > 1e-4 || !best.is_finite() {
        return Err(MellinError::Convergence(format!("residue extrapolation residual {residual:e} at pole {zn}")));
    }
    Ok(best)
}

/// Which evaluation of the symbol a search uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymbolRoute {
    /// Closed form for Bessel kernels, quadrature otherwise.
    Auto,
    Quadrature,
}

fn check_l(kernel: &KernelSpec, l: f64) -> Result<(), MellinError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(MellinError::Domain(format!("l must be positive, got {l}")));
    }
    if let Some(index) = kernel.resonance(l) {
        let exponent = kernel.term(index).expect("resonant term").0;
        return Err(MellinError::Resonance { l, index, exponent });
    }
    if l >= kernel.band_limit() {
        return Err(MellinError::Band { re: l, limit: kernel.band_limit() });
    }
    Ok(())
}

fn beta_route(kernel: &KernelSpec, l: f64, lambda: f64, route: SymbolRoute) -> Result<Complex64, MellinError> {
    let z = Complex64::new(l, lambda);
    match (kernel, route) {
        (KernelSpec::BesselPQ { p, q }, SymbolRoute::Auto) => mellin_symbol_bessel(*p, *q, z),
        _ => mellin_symbol_quadrature(kernel, z),
    }
}

/// `beta_l(lambda) = B(l + i lambda)`.
pub fn beta_l(kernel: &KernelSpec, l: f64, lambda: f64) -> Result<Complex64, MellinError> {
    check_l(kernel, l)?;
    beta_route(kernel, l, lambda, SymbolRoute::Auto)
}

/// Grid and refinement settings for searches over `lambda >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremaSearch {
    pub lambda_max: f64,
    pub step: f64,
    pub tol: f64,
}

impl Default for ExtremaSearch {
    fn default() -> Self {
        ExtremaSearch { lambda_max: 200.0, step: 0.05, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolExtrema {
    pub l: f64,
    pub p_l: f64,
    pub q_l: f64,
    pub lambda_at_max: f64,
    pub lambda_at_min: f64,
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> Result<f64, MellinError>>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, f64), MellinError> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let (fa, fb) = (f(a)?, f(b)?);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for cand in [(a, fa), (b, fb)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Maximum and minimum of `f` over `[0, lambda_max]`: grid scan, then golden refinement.
pub(crate) fn search_extrema<F>(f: &F, s: &ExtremaSearch) -> Result<((f64, f64), (f64, f64)), MellinError>
where
    F: Fn(f64) -> Result<f64, MellinError> + Sync,
{
    if !(s.step > 0.0 && s.lambda_max > s.step && s.tol > 0.0) {
        return Err(MellinError::Domain(format!("bad search window {s:?}")));
    }
    let n = (s.lambda_max / s.step).round() as usize;
    let vals: Vec<f64> = (0..=n).into_par_iter().map(|i| f(i as f64 * s.step)).collect::<Result<_, _>>()?;
    let imax = (0..=n).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let imin = (0..=n).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    let window = |i: usize| ((i as f64 - 1.0) * s.step).max(0.0)..=((i as f64 + 1.0) * s.step).min(s.lambda_max);
    let wmax = window(imax);
    let (lmax, fmax) = golden_max(f, *wmax.start(), *wmax.end(), s.tol)?;
    let wmin = window(imin);
    let neg = |x: f64| f(x).map(|v| -v);
    let (lmin, fmin) = golden_max(&neg, *wmin.start(), *wmin.end(), s.tol)?;
    let max = if vals[imax] > fmax { (imax as f64 * s.step, vals[imax]) } else { (lmax, fmax) };
    let min = if vals[imin] < -fmin { (imin as f64 * s.step, vals[imin]) } else { (lmin, -fmin) };
    Ok((max, min))
}

/// `p_l = max |beta_l|` and `q_l = min |beta_l|` over `[0, 200]`.
pub fn symbol_extrema(kernel: &KernelSpec, l: f64) -> Result<SymbolExtrema, MellinError> {
    symbol_extrema_with(kernel, l, SymbolRoute::Auto, &ExtremaSearch::default())
}

pub fn symbol_extrema_with(
    kernel: &KernelSpec,
    l: f64,
    route: SymbolRoute,
    search: &ExtremaSearch,
) -> Result<SymbolExtrema, MellinError> {
    check_l(kernel, l)?;
    let f = |lam: f64| beta_route(kernel, l, lam, route).map(|b| b.norm());
    let ((lambda_at_max, p_l), (lambda_at_min, q_l)) = search_extrema(&f, search)?;
    let tail = f(search.lambda_max)?;
    let before = f(search.lambda_max - search.step)?;
    if p_l > 0.0 && (tail >= p_l || tail > before * (1.0 + 1e-12)) {
        return Err(MellinError::Convergence(format!(
            "|beta_l| not decaying at lambda = {} ({tail:e} vs max {p_l:e})",
            search.lambda_max
        )));
    }
    Ok(SymbolExtrema { l, p_l, q_l, lambda_at_max, lambda_at_min })
}

/// Samples of `beta_l` on a symmetric grid `-lambda_max ..= lambda_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolSamples {
    pub l: f64,
    pub lambda_grid: Vec<f64>,
    pub beta_values: Vec<Complex64>,
    pub p_l: f64,
    pub q_l: f64,
}

pub fn sample_symbol(kernel: &KernelSpec, l: f64, lambda_max: f64, step: f64) -> Result<SymbolSamples, MellinError> {
    check_l(kernel, l)?;
    if !(step > 0.0 && lambda_max > 0.0) {
        return Err(MellinError::Domain("sample grid needs positive step and extent".into()));
    }
    let n = (lambda_max / step).round() as i64;
    let lambda_grid: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let beta_values: Vec<Complex64> =
        lambda_grid.par_iter().map(|&lam| beta_route(kernel, l, lam, SymbolRoute::Auto)).collect::<Result<_, _>>()?;
    let p_l = beta_values.iter().fold(0.0f64, |m, b| m.max(b.norm()));
    let q_l = beta_values.iter().fold(f64::INFINITY, |m, b| m.min(b.norm()));
    Ok(SymbolSamples { l, lambda_grid, beta_values, p_l, q_l })
}
