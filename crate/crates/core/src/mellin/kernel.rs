use serde::{Deserialize, Serialize};

use super::MellinError;
use crate::specfun::{self, ln_abs_gamma};

/// Two exponents closer than this are the same resonance.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Small-`t` expansion `v(t) = sum_k v_k t^{r_k} + O(t^{r_{N+1}})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelExpansion {
    terms: Vec<(f64, f64)>,
    remainder_exponent: f64,
}

impl KernelExpansion {
    pub fn new(terms: Vec<(f64, f64)>, remainder_exponent: f64) -> Result<Self, MellinError> {
        let mut prev = -0.5;
        for &(r, v) in &terms {
            if !r.is_finite() || !v.is_finite() || r <= prev {
                return Err(MellinError::InvalidKernel(format!("exponents must increase from -1/2, got {r} after {prev}")));
            }
            if v == 0.0 {
                return Err(MellinError::InvalidKernel(format!("zero coefficient at exponent {r}")));
            }
            prev = r;
        }
        if !remainder_exponent.is_finite() || remainder_exponent <= prev {
            return Err(MellinError::InvalidKernel(format!(
                "remainder exponent {remainder_exponent} must exceed the last exponent {prev}"
            )));
        }
        Ok(KernelExpansion { terms, remainder_exponent })
    }

    /// First `n` terms of `t^q J_p(t)`.
    pub fn bessel(p: f64, q: f64, n: usize) -> Self {
        let terms = (0..n).map(|k| (p + q + 2.0 * k as f64, bessel_coefficient(p, k))).collect();
        KernelExpansion { terms, remainder_exponent: p + q + 2.0 * n as f64 }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn remainder_exponent(&self) -> f64 {
        self.remainder_exponent
    }

    /// Index `n` with `|l - (r_n + 1/2)| < RESONANCE_TOL`.
    pub fn resonance(&self, l: f64) -> Option<usize> {
        self.terms.iter().position(|(r, _)| (l - r - 0.5).abs() < RESONANCE_TOL)
    }

    /// Right end `r_{N+1} + 1/2` of the continuation band.
    pub fn band_limit(&self) -> f64 {
        self.remainder_exponent + 0.5
    }
}

/// `v_k = (-1)^k 2^{-2k-p} / (k! Gamma(k+p+1))`.
pub fn bessel_coefficient(p: f64, k: usize) -> f64 {
    let kf = k as f64;
    let (lg1, _) = ln_abs_gamma(kf + 1.0).expect("k! is finite");
    let (lg2, s2) = ln_abs_gamma(kf + p + 1.0).expect("p >= -1/2 keeps k+p+1 positive");
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * s2 * (-(2.0 * kf + p) * std::f64::consts::LN_2 - lg1 - lg2).exp()
}

/// Samples of `v` on an increasing grid, with a supplied small-`t` expansion.
///
/// Below the first sample `v` equals the expansion, between samples it is linear,
/// and beyond the last sample it vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKernel {
    t: Vec<f64>,
    v: Vec<f64>,
    expansion: KernelExpansion,
}

impl TabulatedKernel {
    pub fn new(t: Vec<f64>, v: Vec<f64>, expansion: KernelExpansion) -> Result<Self, MellinError> {
        if t.len() < 2 || t.len() != v.len() {
            return Err(MellinError::InvalidKernel("need at least two samples of matching length".into()));
        }
        if !(t[0] > 0.0) || t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(MellinError::InvalidKernel("sample grid must be positive, finite and increasing".into()));
        }
        Ok(TabulatedKernel { t, v, expansion })
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.t, &self.v)
    }

    pub fn expansion(&self) -> &KernelExpansion {
        &self.expansion
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < self.t[0] {
            return self.expansion.terms.iter().map(|(r, c)| c * t.powf(*r)).sum();
        }
        if t > self.t_max() {
            return 0.0;
        }
        let i = self.t.partition_point(|x| *x <= t).clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        self.v[i - 1] * (1.0 - w) + self.v[i] * w
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|x| *x == 0.0) && self.expansion.terms.is_empty()
    }

    pub fn negated(&self) -> Self {
        let terms = self.expansion.terms.iter().map(|(r, c)| (*r, -c)).collect();
        TabulatedKernel {
            t: self.t.clone(),
            v: self.v.iter().map(|x| -x).collect(),
            expansion: KernelExpansion { terms, remainder_exponent: self.expansion.remainder_exponent },
        }
    }
}

/// A dilation kernel `v(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// `v(t) = t^q J_p(t)`.
    BesselPQ { p: f64, q: f64 },
    Tabulated(TabulatedKernel),
}

impl KernelSpec {
    pub fn bessel(p: f64, q: f64) -> Result<Self, MellinError> {
        if !p.is_finite() || !q.is_finite() || p < -0.5 || p + q <= -0.5 || q > 1.0 {
            return Err(MellinError::InvalidKernel(format!("Bessel kernel needs p >= -1/2, p+q > -1/2, q <= 1; got p={p}, q={q}")));
        }
        Ok(KernelSpec::BesselPQ { p, q })
    }

    /// `sqrt(2/pi) cos t`.
    pub fn cosine() -> Self {
        KernelSpec::BesselPQ { p: -0.5, q: 0.5 }
    }

    /// `sqrt(2/pi) sin t`.
    pub fn sine() -> Self {
        KernelSpec::BesselPQ { p: 0.5, q: 0.5 }
    }

    pub fn tabulated(k: TabulatedKernel) -> Self {
        KernelSpec::Tabulated(k)
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            KernelSpec::BesselPQ { p, q } => bessel_pq(*p, *q, t),
            KernelSpec::Tabulated(k) => k.value(t),
        }
    }

    /// Expansion term `k`, if the kernel has one.
    pub fn term(&self, k: usize) -> Option<(f64, f64)> {
        match self {
            KernelSpec::BesselPQ { p, q } => Some((p + q + 2.0 * k as f64, bessel_coefficient(*p, k))),
            KernelSpec::Tabulated(t) => t.expansion.terms.get(k).copied(),
        }
    }

    /// Number of known terms; `None` for the infinite Bessel series.
    pub fn num_terms(&self) -> Option<usize> {
        match self {
            KernelSpec::BesselPQ { .. } => None,
            KernelSpec::Tabulated(t) => Some(t.expansion.len()),
        }
    }

    /// Expansion with at least `n` terms when available.
    pub fn expansion(&self, n: usize) -> KernelExpansion {
        match self {
            KernelSpec::BesselPQ { p, q } => KernelExpansion::bessel(*p, *q, n),
            KernelSpec::Tabulated(t) => t.expansion.clone(),
        }
    }

    /// Terms with exponent below `limit`.
    pub fn terms_below(&self, limit: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut k = 0;
        while let Some((r, v)) = self.term(k) {
            if r >= limit {
                break;
            }
            out.push((r, v));
            k += 1;
        }
        out
    }

    /// Next exponent after the known terms, infinite for Bessel kernels.
    pub fn band_limit(&self) -> f64 {
        match self {
            KernelSpec::BesselPQ { .. } => f64::INFINITY,
            KernelSpec::Tabulated(t) => t.expansion.band_limit(),
        }
    }

    /// Exponent of the first term not among the first `n`.
    pub fn exponent_after(&self, n: usize) -> f64 {
        match self.term(n) {
            Some((r, _)) => r,
            None => match self {
                KernelSpec::Tabulated(t) => t.expansion.remainder_exponent,
                KernelSpec::BesselPQ { .. } => unreachable!("Bessel series is infinite"),
            },
        }
    }

    /// Index `n` with `l` resonant against `r_n + 1/2`.
    pub fn resonance(&self, l: f64) -> Option<usize> {
        let mut k = 0;
        while let Some((r, _)) = self.term(k) {
            if (l - r - 0.5).abs() < RESONANCE_TOL {
                return Some(k);
            }
            if r > l {
                return None;
            }
            k += 1;
        }
        None
    }

    /// `v(t) - sum_{k<n} v_k t^{r_k}`.
    pub fn remainder(&self, t: f64, n: usize) -> f64 {
        match self {
            KernelSpec::BesselPQ { p, q } if t <= 2.0 => {
                // tail of the series, summed directly to avoid cancellation
                let mut s = 0.0;
                let lt = t.ln();
                for k in n..n + 200 {
                    let (r, c) = (p + q + 2.0 * k as f64, bessel_coefficient(*p, k));
                    let term = c * (r * lt).exp();
                    s += term;
                    if term.abs() <= 1e-18 * s.abs().max(1e-300) {
                        break;
                    }
                }
                s
            }
            _ => {
                let mut s = self.value(t);
                for k in 0..n {
                    let (r, c) = self.term(k).expect("remainder order within known terms");
                    s -= c * t.powf(r);
                }
                s
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, KernelSpec::Tabulated(t) if t.is_zero())
    }
}

/// `t^q J_p(t)` with the two trigonometric orders special-cased.
pub fn bessel_pq(p: f64, q: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return if p + q == 0.0 { bessel_coefficient(p, 0) } else { 0.0 };
    }
    let c = std::f64::consts::FRAC_2_PI.sqrt();
    if p == -0.5 {
        return c * t.powf(q - 0.5) * t.cos();
    }
    if p == 0.5 {
        return c * t.powf(q - 0.5) * t.sin();
    }
    t.powf(q) * specfun::bessel_j(p, t).expect("validated Bessel order")
}
