use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::symbol::{search_extrema, symbol_extrema, ExtremaSearch};
use super::{KernelSpec, MellinError, RESONANCE_TOL};
use crate::specfun::{gamma_real, ln_abs_gamma, log_gamma, SpecfunError};

/// Parity class of the d-dimensional operator: cosine (even channels) or sine (odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cosine,
    Sine,
}

impl Kind {
    /// Lowest channel of this parity.
    pub fn first_channel(self) -> usize {
        match self {
            Kind::Cosine => 0,
            Kind::Sine => 1,
        }
    }

    /// The d = 1 kernel `sqrt(2/pi) cos t` or `sqrt(2/pi) sin t`.
    pub fn kernel(self) -> KernelSpec {
        match self {
            Kind::Cosine => KernelSpec::cosine(),
            Kind::Sine => KernelSpec::sine(),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Cosine => "cosine",
            Kind::Sine => "sine",
        })
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" | "cos" | "cosine" => Ok(Kind::Cosine),
            "s" | "sin" | "sine" => Ok(Kind::Sine),
            other => Err(format!("unknown kind {other:?} (expected c or s)")),
        }
    }
}

/// `sigma_l = 1 / max |beta_l|`.
pub fn sigma_l(kernel: &KernelSpec, l: f64) -> Result<f64, MellinError> {
    let e = symbol_extrema(kernel, l)?;
    Ok(if e.p_l > 0.0 { 1.0 / e.p_l } else { f64::INFINITY })
}

fn min_ratio(num: f64, den: f64, scale: f64) -> Result<f64, MellinError> {
    // |Gamma(num + i lambda/2)| / |Gamma(den - i lambda/2)|
    let f = |lam: f64| -> Result<f64, MellinError> {
        let a = log_gamma(Complex::new(num, 0.5 * lam))?;
        match log_gamma(Complex::new(den, -0.5 * lam)) {
            Ok(b) => Ok((a.re - b.re).exp()),
            Err(SpecfunError::Pole { .. }) => Ok(0.0),
            Err(e) => Err(e.into()),
        }
    };
    let (_, (_, min)) = search_extrema(&f, &ExtremaSearch::default())?;
    Ok(scale * min)
}

/// `sigma_l` of `t^q J_p(t)` as `2^{-q+l+1/2} min_lambda |Gamma((p-q+l+i lambda+3/2)/2) / Gamma((p+q-l-i lambda+1/2)/2)|`.
pub fn sigma_bes5(p: f64, q: f64, l: f64) -> Result<f64, MellinError> {
    let kernel = KernelSpec::bessel(p, q)?;
    if !(l > 0.0) {
        return Err(MellinError::Domain(format!("l must be positive, got {l}")));
    }
    if let Some(index) = kernel.resonance(l) {
        return Err(MellinError::Resonance { l, index, exponent: p + q + 2.0 * index as f64 });
    }
    let s = min_ratio((p - q + l + 1.5) / 2.0, (p + q - l + 0.5) / 2.0, 2f64.powf(-q + l + 0.5))?;
    finite("sigma", l, s)
}

fn finite(what: &'static str, l: f64, v: f64) -> Result<f64, MellinError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(MellinError::Overflow { what, l })
    }
}

fn check_d_l(d: usize, l: f64) -> Result<(), MellinError> {
    if d < 1 {
        return Err(MellinError::Domain("dimension d must be at least 1".into()));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(MellinError::Domain(format!("l must be positive, got {l}")));
    }
    Ok(())
}

/// Whether `l = offset + 2k` for some integer `k >= 0`.
pub(crate) fn on_ladder(l: f64, offset: f64) -> bool {
    let k = ((l - offset) / 2.0).round();
    k >= 0.0 && (l - offset - 2.0 * k).abs() < RESONANCE_TOL
}

/// Threshold of channel `n`: `2^l min_lambda |Gamma((n+d/2+l+i lambda)/2) / Gamma((n+d/2-l-i lambda)/2)|`.
///
/// Returns 0 when `l = n + d/2 + 2k`, where the denominator has a pole at `lambda = 0`.
pub fn sigma_channel(d: usize, l: f64, n: usize) -> Result<f64, MellinError> {
    check_d_l(d, l)?;
    let base = n as f64 + d as f64 / 2.0;
    if on_ladder(l, base) {
        return Ok(0.0);
    }
    let s = min_ratio((base + l) / 2.0, (base - l) / 2.0, 2f64.powf(l))?;
    finite("channel threshold", l, s)
}

/// Closed-form cosine or sine threshold, the channel minimum taken at `lambda = 0`.
pub fn sigma_cs(d: usize, l: f64, kind: Kind) -> Result<f64, MellinError> {
    check_d_l(d, l)?;
    let shift = match kind {
        Kind::Cosine => 0.0,
        Kind::Sine => 1.0,
    };
    let half_d = d as f64 / 2.0;
    if on_ladder(l, half_d + shift) {
        let k = ((l - half_d - shift) / 2.0).round() as usize;
        return Err(MellinError::Resonance { l, index: k, exponent: l - 0.5 });
    }
    let (num, _) = ln_abs_gamma((half_d + l + shift) / 2.0)?;
    let (den, _) = ln_abs_gamma((half_d - l + shift) / 2.0)?;
    finite("sigma", l, (l * std::f64::consts::LN_2 + num - den).exp())
}

/// The d = 1 thresholds in reflected form `(pi/2)^{1/2} / |trig(pi(1/2-l)/2) Gamma(1/2-l)|`.
///
/// Undefined where `Gamma(1/2 - l)` has a pole.
pub fn sigma_cs_reflection(l: f64, kind: Kind) -> Result<f64, MellinError> {
    let x = std::f64::consts::PI * (0.5 - l) / 2.0;
    let trig = match kind {
        Kind::Cosine => x.cos(),
        Kind::Sine => x.sin(),
    };
    let g = gamma_real(0.5 - l)?;
    finite("sigma", l, std::f64::consts::FRAC_PI_2.sqrt() / (trig * g).abs())
}
