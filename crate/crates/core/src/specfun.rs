//! Complex log-Gamma, real Gamma and Bessel functions of the first kind.

use num_complex::Complex;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecfunError {
    #[error("Gamma pole at {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
}

/// Distance to a nonpositive integer below which an argument counts as a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Below this argument `bessel_j` sums the power series for the base orders.
pub const BESSEL_CROSSOVER: f64 = 13.0;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole(re: f64, im: f64) -> bool {
    if im.abs() >= POLE_TOL || re > 0.5 {
        return false;
    }
    let k = re.round();
    k <= 0.0 && (re - k).hypot(im) < POLE_TOL
}

fn check_pole<T: Scalar>(z: Complex<T>) -> Result<(), SpecfunError> {
    let (re, im) = (z.re.as_f64(), z.im.as_f64());
    if !re.is_finite() || !im.is_finite() {
        return Err(SpecfunError::Domain { what: "log_gamma argument", value: if re.is_finite() { im } else { re } });
    }
    if is_pole(re, im) {
        return Err(SpecfunError::Pole { re, im });
    }
    Ok(())
}

fn lanczos<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let one = T::one();
    let zm1 = z - one;
    let mut x = Complex::new(T::lit(LANCZOS[0]), T::zero());
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x = x + Complex::new(T::lit(c), T::zero()) / (zm1 + T::lit(i as f64));
    }
    let t = zm1 + T::lit(LANCZOS_G + 0.5);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    (zm1 + T::lit(0.5)) * t.ln() - t + x.ln() + half_ln_2pi
}

fn lanczos_real<T: Scalar>(x: T) -> T {
    let xm1 = x - T::one();
    let mut s = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        s += T::lit(c) / (xm1 + T::lit(i as f64));
    }
    let t = xm1 + T::lit(LANCZOS_G + 0.5);
    (xm1 + T::lit(0.5)) * t.ln() - t + s.ln() + T::lit(0.918_938_533_204_672_8)
}

/// `ln sin(pi z)` for `Im z >= 0`, safe against overflow of `sin`.
fn ln_sin_pi<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let w = z * T::PI();
    if w.im > T::lit(20.0) {
        let i = Complex::new(T::zero(), T::one());
        let e = (i * w * T::lit(2.0)).exp();
        -(i * w) + (Complex::new(T::one(), T::zero()) - e).ln() + Complex::new(T::lit(0.5).ln(), T::FRAC_PI_2())
    } else {
        w.sin().ln()
    }
}

fn log_gamma_upper<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    if z.re >= half {
        return lanczos(z);
    }
    if z.re >= T::lit(-20.0) {
        let n = (half - z.re).ceil().to_usize().unwrap_or(0);
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            acc = acc + (z + T::lit(k as f64)).ln();
        }
        return lanczos(z + T::lit(n as f64)) - acc;
    }
    let one = Complex::new(T::one(), T::zero());
    Complex::new(T::PI().ln(), T::zero()) - ln_sin_pi(z) - lanczos(one - z)
}

/// Log-Gamma on the principal branch of `ln Gamma`, analytic off the negative real axis.
///
/// Arguments within [`POLE_TOL`] of `0, -1, -2, ...` raise [`SpecfunError::Pole`].
pub fn log_gamma<T: Scalar>(z: Complex<T>) -> Result<Complex<T>, SpecfunError> {
    check_pole(z)?;
    if z.im < T::zero() {
        return Ok(log_gamma_upper(z.conj()).conj());
    }
    Ok(log_gamma_upper(z))
}

/// `|Gamma(z)|^{-1}`, zero at the poles.
pub fn recip_gamma_abs<T: Scalar>(z: Complex<T>) -> T {
    match log_gamma(z) {
        Ok(lg) => (-lg.re).exp(),
        Err(_) => T::zero(),
    }
}

/// `ln |Gamma(x)|` and the sign of `Gamma(x)` for real `x`.
pub fn ln_abs_gamma<T: Scalar>(x: T) -> Result<(T, T), SpecfunError> {
    let xf = x.as_f64();
    if !xf.is_finite() {
        return Err(SpecfunError::Domain { what: "gamma argument", value: xf });
    }
    if is_pole(xf, 0.0) {
        return Err(SpecfunError::Pole { re: xf, im: 0.0 });
    }
    if x >= T::lit(0.5) {
        return Ok((lanczos_real(x), T::one()));
    }
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    let s = (T::PI() * x).sin();
    let lg = T::PI().ln() - s.abs().ln() - lanczos_real(T::one() - x);
    let sign = if s < T::zero() { -T::one() } else { T::one() };
    Ok((lg, sign))
}

/// Gamma function on the real line, with the correct sign for negative arguments.
pub fn gamma_real<T: Scalar>(x: T) -> Result<T, SpecfunError> {
    let (lg, sign) = ln_abs_gamma(x)?;
    Ok(sign * lg.exp())
}

/// `|Gamma(a + i lambda) / Gamma(b + i lambda)|`, evaluated through log-Gamma differences.
///
/// A pole in the numerator is an error; a pole in the denominator gives 0.
pub fn gamma_ratio_abs<T: Scalar>(a: T, b: T, lambda: T) -> Result<T, SpecfunError> {
    let num = log_gamma(Complex::new(a, lambda))?;
    match log_gamma(Complex::new(b, lambda)) {
        Ok(den) => Ok((num.re - den.re).exp()),
        Err(SpecfunError::Pole { .. }) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

/// Bessel function of the first kind `J_p(t)` for real order `p >= -1/2` and `t > 0`.
pub fn bessel_j<T: Scalar>(p: T, t: T) -> Result<T, SpecfunError> {
    let (pf, tf) = (p.as_f64(), t.as_f64());
    if !(pf >= -0.5 - 1e-12) || !pf.is_finite() {
        return Err(SpecfunError::Domain { what: "Bessel order", value: pf });
    }
    if !(tf > 0.0) || !tf.is_finite() {
        return Err(SpecfunError::Domain { what: "Bessel argument", value: tf });
    }
    let half = T::lit(0.5);
    if p == -half {
        return Ok((T::lit(2.0) / (T::PI() * t)).sqrt() * t.cos());
    }
    if p == half {
        return Ok((T::lit(2.0) / (T::PI() * t)).sqrt() * t.sin());
    }
    let cross = T::lit(BESSEL_CROSSOVER);
    if t <= cross || t <= p {
        return Ok(bessel_j_series(p, t));
    }
    if t >= T::lit(2.0) * p * p {
        return Ok(bessel_j_asymptotic(p, t));
    }
    // upward recurrence in the order is stable while the order stays below t
    let m = (p + half).floor();
    let nu0 = p - m;
    let steps = m.to_usize().unwrap_or(0);
    let mut j0 = bessel_j_asymptotic(nu0, t);
    if steps == 0 {
        return Ok(j0);
    }
    let mut j1 = bessel_j_asymptotic(nu0 + T::one(), t);
    for k in 1..steps {
        let nu = nu0 + T::lit(k as f64);
        let j2 = T::lit(2.0) * nu / t * j1 - j0;
        j0 = j1;
        j1 = j2;
    }
    Ok(j1)
}

/// Ascending power series for `J_p(t)`.
pub fn bessel_j_series<T: Scalar>(p: T, t: T) -> T {
    let half_t = t * T::lit(0.5);
    let x2 = half_t * half_t;
    let lg = lanczos_real(p + T::one());
    let mut term = (p * half_t.ln() - lg).exp();
    let mut sum = term;
    let eps = T::epsilon() * T::lit(0.25);
    let mut k = 1usize;
    loop {
        let kf = T::lit(k as f64);
        term = -term * x2 / (kf * (kf + p));
        sum += term;
        if kf > half_t && term.abs() <= eps * sum.abs() {
            break;
        }
        if k > 500 {
            break;
        }
        k += 1;
    }
    sum
}

/// Hankel large-argument expansion of `J_p(t)`, truncated at its smallest term.
pub fn bessel_j_asymptotic<T: Scalar>(p: T, t: T) -> T {
    let mu = T::lit(4.0) * p * p;
    let eight_t = T::lit(8.0) * t;
    let mut pp = T::one();
    let mut qq = T::zero();
    let mut b = T::one();
    let mut prev = T::infinity();
    let eps = T::epsilon() * T::lit(0.01);
    for k in 1..400usize {
        let kf = T::lit(k as f64);
        let odd = T::lit((2 * k - 1) as f64);
        let next = b * (mu - odd * odd) / (kf * eight_t);
        if next == T::zero() {
            break;
        }
        if next.abs() > prev.abs() && k > 2 {
            break;
        }
        prev = next;
        b = next;
        let sign = if (k / 2) % 2 == 0 { T::one() } else { -T::one() };
        if k % 2 == 1 {
            qq += sign * b;
        } else {
            pp += sign * b;
        }
        if b.abs() < eps {
            break;
        }
    }
    let chi = t - (p * T::lit(0.5) + T::lit(0.25)) * T::PI();
    (T::lit(2.0) / (T::PI() * t)).sqrt() * (pp * chi.cos() - qq * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_gamma_classical_values() {
        let z = log_gamma(Complex::new(1.0, 0.0)).unwrap();
        assert!(z.norm() < 1e-15);
        let h = log_gamma(Complex::new(0.5f64, 0.0)).unwrap();
        assert_relative_eq!(h.re, std::f64::consts::PI.sqrt().ln(), max_relative = 1e-14);
    }

    #[test]
    fn poles_are_rejected() {
        for k in 0..5 {
            let z = Complex::new(-(k as f64) + 1e-13, 0.0);
            assert!(matches!(log_gamma(z), Err(SpecfunError::Pole { .. })));
            assert!(gamma_real(-(k as f64)).is_err());
        }
        assert!(log_gamma(Complex::new(-2.0, 1e-6)).is_ok());
    }

    #[test]
    fn gamma_real_signs() {
        assert_relative_eq!(gamma_real(4.0f64).unwrap(), 6.0, max_relative = 1e-14);
        let v = gamma_real(-0.5f64).unwrap();
        assert_relative_eq!(v, -2.0 * std::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert!(gamma_real(-1.5f64).unwrap() > 0.0);
    }

    #[test]
    fn gamma_ratio_identities() {
        assert_relative_eq!(gamma_ratio_abs(0.3f64, 0.3, 7.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_ratio_abs(0.75f64, -0.25, 0.0).unwrap(), 0.25, max_relative = 1e-13);
        assert_relative_eq!(gamma_ratio_abs(1.0f64, 2.0, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(gamma_ratio_abs(1.0f64, -1.0, 0.0).unwrap(), 0.0);
        assert!(gamma_ratio_abs(-2.0f64, 1.0, 0.0).is_err());
    }

    #[test]
    fn reflection_branch_far_left() {
        // Gamma(-25.5) from the recurrence down from Gamma(0.5)
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        for _ in 0..26 {
            x -= 1.0;
            g /= x;
        }
        let lg = log_gamma(Complex::new(-25.5f64, 0.0)).unwrap();
        assert_relative_eq!(lg.re, g.abs().ln(), max_relative = 1e-12);
        assert_relative_eq!(gamma_real(-25.5f64).unwrap(), g, max_relative = 1e-11);
    }

    #[test]
    fn single_precision_instantiates() {
        let g = gamma_real(5.0f32).unwrap();
        assert!((g - 24.0).abs() < 1e-4);
        let j = bessel_j(0.0f32, 1.0).unwrap();
        assert!((j - 0.765_197_7).abs() < 1e-5);
    }

    #[test]
    fn bessel_half_orders() {
        let c = (2.0 / std::f64::consts::PI).sqrt();
        for t in [0.5f64, 1.0, 2.0] {
            let s = t.sqrt() * bessel_j_series(0.5, t);
            assert_relative_eq!(s, c * t.sin(), max_relative = 1e-13);
            let k = t.sqrt() * bessel_j_series(-0.5, t);
            assert_relative_eq!(k, c * t.cos(), max_relative = 1e-13);
        }
    }

    #[test]
    fn bessel_domain() {
        assert!(bessel_j(-0.7f64, 1.0).is_err());
        assert!(bessel_j(0.0f64, 0.0).is_err());
        assert!(bessel_j(0.0f64, -1.0).is_err());
    }

    #[test]
    fn bessel_leading_term() {
        for p in [-0.3f64, 0.0, 1.0, 2.5] {
            let t = 1e-4;
            let lead = (t / 2.0f64).powf(p) / gamma_real(p + 1.0).unwrap();
            assert_relative_eq!(bessel_j(p, t).unwrap(), lead, max_relative = 1e-7);
        }
    }
}
