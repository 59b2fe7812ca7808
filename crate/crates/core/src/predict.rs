//! Closed-form negative-eigenvalue counts.
//!
//! Every predictor returns a [`CountResult`]. Channel counts for the
//! d-dimensional cosine and sine operators are combined with the
//! multiplicities [`nu`].

use std::fmt;
use std::ops::Add;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::mellin::{self, on_ladder, KernelExpansion, KernelSpec, Kind, MellinError, RESONANCE_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("l = {l} sits on the interval endpoint {endpoint}")]
    Boundary { l: f64, endpoint: f64 },
    #[error("channel n = {n} does not belong to the {kind} operator")]
    Parity { n: usize, kind: Kind },
    #[error("multiplicity overflows for d = {d}, n = {n}")]
    Overflow { d: usize, n: usize },
    #[error(transparent)]
    Mellin(#[from] MellinError),
}

/// Number of negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountResult {
    Finite(u64),
    Infinite,
}

impl CountResult {
    pub fn is_infinite(self) -> bool {
        matches!(self, CountResult::Infinite)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            CountResult::Finite(n) => Some(n),
            CountResult::Infinite => None,
        }
    }
}

impl Add for CountResult {
    type Output = CountResult;

    fn add(self, rhs: CountResult) -> CountResult {
        match (self, rhs) {
            (CountResult::Finite(a), CountResult::Finite(b)) => CountResult::Finite(a.saturating_add(b)),
            _ => CountResult::Infinite,
        }
    }
}

impl fmt::Display for CountResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountResult::Finite(n) => write!(f, "{n}"),
            CountResult::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for CountResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CountResult::Finite(n) => s.serialize_u64(*n),
            CountResult::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// A count together with the `gamma = 0` marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub count: CountResult,
    pub unperturbed: bool,
}

impl Prediction {
    pub fn new(gamma: f64, count: CountResult) -> Self {
        Prediction { count, unperturbed: gamma == 0.0 }
    }
}

/// Sign of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn of(gamma: f64) -> Option<Sign> {
        if gamma > 0.0 {
            Some(Sign::Plus)
        } else if gamma < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }
}

/// Per-channel counting rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelVariant {
    /// Interval counts, `k + 1` on each interval of length 2.
    Bes,
    /// Sign-restricted counting of expansion terms.
    Fr,
}

impl std::str::FromStr for ChannelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bes" => Ok(ChannelVariant::Bes),
            "fr" => Ok(ChannelVariant::Fr),
            other => Err(format!("unknown channel variant {other:?} (expected bes or fr)")),
        }
    }
}

fn check_l(l: f64) -> Result<(), PredictError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(PredictError::Domain(format!("l must be positive, got {l}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<(), PredictError> {
    if !gamma.is_finite() {
        return Err(PredictError::Domain(format!("gamma must be finite, got {gamma}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<(), PredictError> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(PredictError::Domain(format!("threshold must be non-negative, got {sigma}")));
    }
    Ok(())
}

/// `#{k : r_k < l - 1/2, gamma v_k < 0}`, or infinite at resonance or above `sigma`.
pub fn count_fr(expansion: &KernelExpansion, l: f64, gamma: f64, sigma: f64) -> Result<CountResult, PredictError> {
    check_l(l)?;
    check_gamma(gamma)?;
    check_sigma(sigma)?;
    if expansion.band_limit() <= l {
        return Err(PredictError::Domain(format!(
            "expansion stops at exponent {} and cannot resolve l = {l}",
            expansion.remainder_exponent()
        )));
    }
    if gamma == 0.0 {
        return Ok(CountResult::Finite(0));
    }
    if expansion.resonance(l).is_some() || gamma.abs() > sigma {
        return Ok(CountResult::Infinite);
    }
    let n = expansion.terms().iter().filter(|&&(r, v)| r < l - 0.5 && gamma * v < 0.0).count();
    Ok(CountResult::Finite(n as u64))
}

/// Index `k` with `l` in `(base + 2k, base + 2k + 2)`, `None` below `base`.
fn interval_index(l: f64, base: f64) -> Result<Option<u64>, PredictError> {
    let x = (l - base) / 2.0;
    let nearest = x.round();
    if nearest >= 0.0 && (l - base - 2.0 * nearest).abs() < RESONANCE_TOL {
        return Err(PredictError::Boundary { l, endpoint: base + 2.0 * nearest });
    }
    if x < 0.0 {
        return Ok(None);
    }
    Ok(Some(x.floor() as u64))
}

/// Interval counts for `t^q J_p(t)`.
pub fn count_bes(p: f64, q: f64, l: f64, gamma: f64, sigma: f64) -> Result<CountResult, PredictError> {
    let kernel = KernelSpec::bessel(p, q)?;
    check_l(l)?;
    check_gamma(gamma)?;
    check_sigma(sigma)?;
    if gamma == 0.0 {
        return Ok(CountResult::Finite(0));
    }
    if kernel.resonance(l).is_some() || gamma.abs() > sigma {
        return Ok(CountResult::Infinite);
    }
    let base = if gamma < 0.0 { p + q + 0.5 } else { p + q + 2.5 };
    Ok(match interval_index(l, base)? {
        None => CountResult::Finite(0),
        Some(k) => CountResult::Finite(k + 1),
    })
}

/// Counts for the one-dimensional cosine and sine operators.
pub fn count_d1(l: f64, gamma: f64, kind: Kind) -> Result<CountResult, PredictError> {
    check_l(l)?;
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(CountResult::Finite(0));
    }
    let base = match kind {
        Kind::Cosine => 0.5,
        Kind::Sine => 1.5,
    };
    if on_ladder(l, base) {
        return Ok(CountResult::Infinite);
    }
    let sigma = mellin::sigma_cs(1, l, kind)?;
    if gamma.abs() > sigma {
        return Ok(CountResult::Infinite);
    }
    Ok(match interval_index(l, base)? {
        None => CountResult::Finite(0),
        Some(k) if gamma > 0.0 => CountResult::Finite((k + 1) / 2),
        Some(k) => CountResult::Finite(k / 2 + 1),
    })
}

/// Sign `tau_n` multiplying the coupling in channel `n`.
pub fn tau(n: usize) -> f64 {
    let e = if n % 2 == 0 { n / 2 } else { (n + 1) / 2 };
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bessel parameters `(p, q)` of channel `n` in dimension `d`.
pub fn channel_params(d: usize, n: usize) -> (f64, f64) {
    (n as f64 + (d as f64 - 2.0) / 2.0, 0.5)
}

/// Expansion of `t^q J_p(t)` long enough to cover `l`.
pub fn bessel_expansion_for(p: f64, q: f64, l: f64) -> KernelExpansion {
    let n = (((l - 0.5 - p - q) / 2.0).max(0.0).floor() as usize) + 2;
    KernelExpansion::bessel(p, q, n)
}

fn check_channel(d: usize, n: usize, kind: Kind) -> Result<(), PredictError> {
    if d < 1 {
        return Err(PredictError::Domain("dimension d must be at least 1".into()));
    }
    if n % 2 != kind.first_channel() {
        return Err(PredictError::Parity { n, kind });
    }
    Ok(())
}

fn channel_with_sigma(
    d: usize,
    n: usize,
    l: f64,
    gamma: f64,
    sigma: f64,
    variant: ChannelVariant,
) -> Result<CountResult, PredictError> {
    let (p, q) = channel_params(d, n);
    let g = tau(n) * gamma;
    match variant {
        ChannelVariant::Bes => count_bes(p, q, l, g, sigma),
        ChannelVariant::Fr => count_fr(&bessel_expansion_for(p, q, l), l, g, sigma),
    }
}

/// Count of channel `n`, coupling `tau_n gamma` against `sigma_channel(d, l, n)`.
pub fn count_channel(
    d: usize,
    n: usize,
    l: f64,
    gamma: f64,
    kind: Kind,
    variant: ChannelVariant,
) -> Result<CountResult, PredictError> {
    check_channel(d, n, kind)?;
    check_l(l)?;
    let sigma = mellin::sigma_channel(d, l, n)?;
    channel_with_sigma(d, n, l, gamma, sigma, variant)
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by i + 1
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Dimension of the degree-`n` spherical harmonics on `S^{d-1}`.
pub fn nu(d: usize, n: usize) -> Result<u64, PredictError> {
    if d < 2 {
        return Err(PredictError::Domain(format!("multiplicities need d >= 2, got {d}")));
    }
    if n == 0 {
        return Ok(1);
    }
    let overflow = || PredictError::Overflow { d, n };
    let top = (n as u64).checked_add(d as u64 - 1).ok_or_else(overflow)?;
    let a = binomial(top, d as u64 - 1).ok_or_else(overflow)?;
    let b = if top >= 2 { binomial(top - 2, d as u64 - 1).ok_or_else(overflow)? } else { 0 };
    u64::try_from(a - b).map_err(|_| overflow())
}

/// Total count of the d-dimensional cosine or sine operator, summed over channels.
pub fn count_total(d: usize, l: f64, gamma: f64, kind: Kind, variant: ChannelVariant) -> Result<CountResult, PredictError> {
    check_l(l)?;
    check_gamma(gamma)?;
    if d < 1 {
        return Err(PredictError::Domain("dimension d must be at least 1".into()));
    }
    if d == 1 {
        return match variant {
            ChannelVariant::Fr => count_d1(l, gamma, kind),
            ChannelVariant::Bes => {
                let (p, q) = channel_params(1, kind.first_channel());
                if on_ladder(l, p + q + 0.5) {
                    return Ok(CountResult::Infinite);
                }
                count_bes(p, q, l, gamma, mellin::sigma_cs(1, l, kind)?)
            }
        };
    }
    if gamma == 0.0 {
        return Ok(CountResult::Finite(0));
    }
    let first = kind.first_channel();
    if on_ladder(l, first as f64 + d as f64 / 2.0) {
        return Ok(CountResult::Infinite);
    }
    if gamma.abs() > mellin::sigma_cs(d, l, kind)? {
        return Ok(CountResult::Infinite);
    }
    let n_max = (l - d as f64 / 2.0).ceil().max(0.0) as usize + 2;
    let mut total = CountResult::Finite(0);
    for n in (first..=n_max).step_by(2) {
        let c = channel_with_sigma(d, n, l, gamma, f64::INFINITY, variant)?;
        let w = nu(d, n)?;
        total = total
            + match c {
                CountResult::Finite(m) => {
                    CountResult::Finite(m.checked_mul(w).ok_or(PredictError::Overflow { d, n })?)
                }
                CountResult::Infinite => CountResult::Infinite,
            };
    }
    Ok(total)
}

/// Closed-form totals `N^{(+/-)}` of the cosine and sine operators for `d >= 2`.
pub fn count_total_closed(d: usize, l: f64, sign: Sign, kind: Kind) -> Result<CountResult, PredictError> {
    check_l(l)?;
    if d < 2 {
        return Err(PredictError::Domain(format!("closed-form totals need d >= 2, got {d}")));
    }
    let base = d as f64 / 2.0 + kind.first_channel() as f64;
    let Some(k) = interval_index(l, base)? else {
        return Ok(CountResult::Finite(0));
    };
    let nu = |n: u64| nu(d, n as usize);
    let mut sum: u64 = 0;
    let add = |acc: u64, mult: u64, a: u64, b: u64| -> Result<u64, PredictError> {
        mult.checked_mul(a + b)
            .and_then(|x| acc.checked_add(x))
            .ok_or(PredictError::Overflow { d, n: k as usize })
    };
    match (kind, sign) {
        (Kind::Cosine, Sign::Minus) => {
            sum = k + 1;
            if k >= 1 {
                for p in 0..=(k - 1) / 2 {
                    sum = add(sum, k - 2 * p - 1, nu(4 * p + 2)?, nu(4 * p + 4)?)?;
                }
            }
        }
        (Kind::Cosine, Sign::Plus) => {
            for p in 0..=k / 2 {
                sum = add(sum, k - 2 * p, nu(4 * p)?, nu(4 * p + 2)?)?;
            }
        }
        (Kind::Sine, Sign::Plus) => {
            sum = (k + 1) * nu(1)?;
            for p in 1..=(k + 1) / 2 {
                sum = add(sum, k + 1 - 2 * p, nu(4 * p - 1)?, nu(4 * p + 1)?)?;
            }
        }
        (Kind::Sine, Sign::Minus) => {
            for p in 0..=k / 2 {
                sum = add(sum, k - 2 * p, nu(4 * p + 1)?, nu(4 * p + 3)?)?;
            }
        }
    }
    Ok(CountResult::Finite(sum))
}
