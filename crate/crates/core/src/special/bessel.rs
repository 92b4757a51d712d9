//! Bessel functions of the first kind `J_nu(x)` for real order `nu >= 0`.
//!
//! Three evaluation routes are combined:
//!
//! * the power series, summed in double-double arithmetic so that the
//!   alternating terms can cancel without destroying the result;
//! * the Hankel asymptotic expansion for large arguments;
//! * Miller's backward recurrence, normalized with the Neumann-type sum
//!   `(x/2)^a = sum_k (a+2k) Gamma(a+k)/k! J_{a+2k}(x)`, whenever the first
//!   two cannot deliver full precision.

use std::f64::consts::PI;

use super::dd::DoubleDouble;
use crate::error::{AflError, Result};

/// Largest order accepted by the public entry points.
pub const MAX_ORDER: f64 = 50.0;

/// Below this argument the plain double series is already well conditioned.
const PLAIN_SERIES_LIMIT: f64 = 2.0;
/// Upper end of the double-double series region.
const SERIES_LIMIT: f64 = 25.0;
/// The asymptotic expansion is only attempted from here on.
const ASYMPTOTIC_START: f64 = 25.0;
/// Largest tolerated ratio between the biggest series term and the sum.
const MAX_CANCELLATION: f64 = 1e16;

/// `J_nu(x)` with argument and order validation.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check_order(nu)?;
    if !x.is_finite() || x < 0.0 {
        return Err(AflError::invalid(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    Ok(j_unchecked(nu, x))
}

pub(crate) fn check_order(nu: f64) -> Result<()> {
    if !(0.0..=MAX_ORDER).contains(&nu) || nu.is_nan() {
        return Err(AflError::UnsupportedOrder { nu, max: MAX_ORDER });
    }
    Ok(())
}

/// `J_nu(x)` without validation. Orders slightly above [`MAX_ORDER`] are
/// fine; they appear internally through `J_{nu+1}`.
pub(crate) fn j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if nu == 0.5 {
        // n = 3 hot path
        return (2.0 / (PI * x)).sqrt() * x.sin();
    }
    if x <= PLAIN_SERIES_LIMIT {
        return series_plain(nu, x) * series_prefactor(nu, x);
    }
    if x <= SERIES_LIMIT || x <= nu {
        if let Some(s) = series_dd(nu, x) {
            return s * series_prefactor(nu, x);
        }
    }
    if x >= ASYMPTOTIC_START {
        if let Some(v) = hankel_asymptotic(nu, x) {
            return v;
        }
    }
    miller(nu, x)
}

/// `J_nu(x) / x^nu`, finite at the origin where it equals `1 / (2^nu Gamma(nu+1))`.
pub(crate) fn j_scaled(nu: f64, x: f64) -> f64 {
    if nu == 0.5 && x > 1e-4 {
        return (2.0 / PI).sqrt() * x.sin() / x;
    }
    if x <= PLAIN_SERIES_LIMIT {
        return series_plain(nu, x) * scaled_prefactor(nu);
    }
    if nu == 0.0 {
        return j_unchecked(0.0, x);
    }
    if x <= SERIES_LIMIT || x <= nu {
        if let Some(s) = series_dd(nu, x) {
            return s * scaled_prefactor(nu);
        }
    }
    j_unchecked(nu, x) / x.powf(nu)
}

/// `J'_nu(x) = (nu/x) J_nu(x) - J_{nu+1}(x)`.
pub(crate) fn j_derivative(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 1.0 { 0.5 } else { 0.0 };
    }
    nu / x * j_unchecked(nu, x) - j_unchecked(nu + 1.0, x)
}

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn series_prefactor(nu: f64, x: f64) -> f64 {
    if nu == 0.0 {
        return 1.0;
    }
    let half = 0.5 * x;
    let g = gamma(nu + 1.0);
    if g.is_finite() {
        let p = half.powf(nu);
        if p.is_finite() && p > 0.0 {
            return p / g;
        }
    }
    (nu * half.ln() - libm::lgamma(nu + 1.0)).exp()
}

fn scaled_prefactor(nu: f64) -> f64 {
    if nu == 0.0 {
        return 1.0;
    }
    let g = gamma(nu + 1.0);
    if g.is_finite() {
        0.5f64.powf(nu) / g
    } else {
        (-nu * std::f64::consts::LN_2 - libm::lgamma(nu + 1.0)).exp()
    }
}

/// `sum_m (-x^2/4)^m / (m! (nu+1)_m)` in plain doubles.
fn series_plain(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        let m = m as f64;
        term *= q / (m * (nu + m));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Same series in double-double; `None` when cancellation is too severe for
/// the result to be trusted.
fn series_dd(nu: f64, x: f64) -> Option<f64> {
    // x^2/4 carried exactly
    let p = x * x;
    let e = x.mul_add(x, -p);
    let q = DoubleDouble::from_f64(p) + DoubleDouble::from_f64(e);
    let q = -q.mul_f64(0.25);

    let mut term = DoubleDouble::from_f64(1.0);
    let mut sum = term;
    let mut largest: f64 = 1.0;
    let mut m = 1usize;
    loop {
        let mf = m as f64;
        term = (term * q).div_f64(mf);
        term = term.div(DoubleDouble::exact_sum(nu, mf));
        sum = sum + term;
        let t = term.abs().to_f64();
        largest = largest.max(t);
        if t <= 1e-34 * sum.abs().to_f64().max(1e-300) || m > 600 {
            break;
        }
        m += 1;
    }
    let s = sum.to_f64();
    if s == 0.0 || largest / s.abs() > MAX_CANCELLATION {
        None
    } else {
        Some(s)
    }
}

/// Hankel's expansion; `None` when the smallest term is not small enough.
fn hankel_asymptotic(nu: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (8.0 * kf * x);
        let mag = term.abs();
        if mag == 0.0 {
            converged = true;
            break;
        }
        if mag > prev {
            break;
        }
        // a_k / x^k enters P (even k) or Q (odd k) with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 {
            converged = true;
            break;
        }
        prev = mag;
    }
    if !converged {
        return None;
    }
    // chi = x - (nu/2 + 1/4) pi, expanded to avoid rounding x - phase
    let phase = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    Some((2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi))
}

/// Miller's backward recurrence with Neumann-sum normalization.
fn miller(nu: f64, x: f64) -> f64 {
    let m = nu.floor();
    let frac = nu - m;
    let m = m as usize;
    let scale = x.max(nu);
    let mut start = (scale + 40.0 + 10.0 * scale.cbrt()).ceil() as usize;
    start = start.max(m + 20);
    if start % 2 == 1 {
        start += 1;
    }

    // Neumann coefficients c_k = (frac+2k) Gamma(frac+k)/k!, c_0 = Gamma(frac+1)
    let mut coeffs = Vec::with_capacity(start / 2 + 1);
    coeffs.push(gamma(frac + 1.0));
    let mut g = gamma(frac + 1.0); // Gamma(frac+1)/1!
    for k in 1..=start / 2 {
        let kf = k as f64;
        if k > 1 {
            g *= (frac + kf - 1.0) / kf;
        }
        coeffs.push((frac + 2.0 * kf) * g);
    }

    let mut y_next = 0.0f64; // y_{i+1}
    let mut y = 1e-300f64; // y_i, starting at i = start
    let mut target = if start == m { y } else { 0.0 };
    let mut norm = if start % 2 == 0 { coeffs[start / 2] * y } else { 0.0 };
    let mut i = start;
    while i > 0 {
        let order = frac + i as f64;
        let y_prev = 2.0 * order / x * y - y_next;
        y_next = y;
        y = y_prev;
        i -= 1;
        if i == m {
            target = y;
        }
        if i % 2 == 0 {
            norm += coeffs[i / 2] * y;
        }
        if y.abs() > 1e250 {
            y *= 1e-250;
            y_next *= 1e-250;
            norm *= 1e-250;
            target *= 1e-250;
        }
    }
    target * (0.5 * x).powf(frac) / norm
}

/// `sqrt(2/(pi x))` times the trigonometric closed form of `J_{l+1/2}`, used
/// only as an independent reference in tests.
#[cfg(test)]
pub(crate) fn half_integer_closed_form(l: u32, x: f64) -> f64 {
    let s = x.sin();
    let c = x.cos();
    let pref = (2.0 / (PI * x)).sqrt();
    match l {
        0 => pref * s,
        1 => pref * (s / x - c),
        2 => pref * ((3.0 / (x * x) - 1.0) * s - 3.0 * c / x),
        3 => pref * ((15.0 / (x * x * x) - 6.0 / x) * s - (15.0 / (x * x) - 1.0) * c),
        _ => unimplemented!("closed form only tabulated up to l = 3"),
    }
}
