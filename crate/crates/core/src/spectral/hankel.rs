//! Radial Fourier (Hankel) transforms.
//!
//! Convention: `f^(rho) = (2 pi)^(n/2) rho^-nu int_0^inf f(r) J_nu(r rho) r^(nu+1) dr`
//! with `nu = (n - 2)/2`, i.e. the `n`-dimensional transform
//! `int f(x) e^{-i x.xi} dx` of a radial function. The inverse carries
//! `(2 pi)^(-n/2)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::profile::RadialProfile;
use crate::error::{AflError, Result};
use crate::quadrature::GaussLegendre;
use crate::special::j_scaled;

pub(crate) fn order(n: u32) -> f64 {
    0.5 * (n as f64 - 2.0)
}

/// `(2 pi)^(n/2)`.
pub(crate) fn forward_constant(n: u32) -> f64 {
    (2.0 * PI).powf(0.5 * n as f64)
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// `int_lo^hi g(t) t^(n-1) J_nu(x t)/(x t)^nu dt` with panels no wider than a
/// half-wave of the kernel and split at `breaks`.
pub(crate) fn bessel_integral(
    g: impl Fn(f64) -> f64,
    n: u32,
    lo: f64,
    hi: f64,
    x: f64,
    breaks: &[f64],
    refine: usize,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let nu = order(n);
    let mut points: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    points.push(lo);
    points.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    points.push(hi);
    let half_wave = if x > 0.0 { PI / x } else { f64::INFINITY };
    let base = ((hi - lo) / 8.0).min(half_wave) / refine as f64;
    let rule = rule();
    let mut sum = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a) / base).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for i in 0..panels {
            let pa = a + h * i as f64;
            let pb = if i + 1 == panels { b } else { pa + h };
            sum += rule.integrate(pa, pb, |t| {
                g(t) * t.powi(n as i32 - 1) * j_scaled(nu, x * t)
            });
        }
    }
    sum
}

/// Forward transform of a profile with (effective) support `[lo, hi]`.
pub(crate) fn forward_numeric(
    f: impl Fn(f64) -> f64,
    n: u32,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    rho: f64,
) -> f64 {
    forward_constant(n) * bessel_integral(f, n, lo, hi, rho, breaks, 1)
}

/// Inverse transform of a spectrum supported on `[lo, hi]`.
pub(crate) fn inverse_numeric(
    fhat: impl Fn(f64) -> f64,
    n: u32,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    r: f64,
) -> f64 {
    bessel_integral(fhat, n, lo, hi, r, breaks, 1) / forward_constant(n)
}

/// Transform of `f` sampled on a positive, increasing frequency grid, returned
/// as a sampled frequency-side profile. Each grid value is computed at two
/// panel resolutions; disagreement beyond `1e-7` (relative to the largest
/// sample) is reported as a convergence failure.
pub fn hankel_transform(f: &RadialProfile, freq_grid: &[f64]) -> Result<RadialProfile> {
    const TOL: f64 = 1e-7;
    if freq_grid.is_empty() || freq_grid.windows(2).any(|w| w[1] <= w[0]) || freq_grid[0] <= 0.0 {
        return Err(AflError::invalid(
            "frequency grid must be positive and strictly increasing",
        ));
    }
    let n = f.n;
    let extent = f.space_extent();
    let breaks = f.space_breaks();
    let coarse: Vec<f64> = freq_grid
        .iter()
        .map(|&rho| {
            forward_constant(n) * bessel_integral(|r| f.value(r), n, 0.0, extent, rho, &breaks, 1)
        })
        .collect();
    let fine: Vec<f64> = freq_grid
        .iter()
        .map(|&rho| {
            forward_constant(n) * bessel_integral(|r| f.value(r), n, 0.0, extent, rho, &breaks, 2)
        })
        .collect();
    let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((&rho, a), b) in freq_grid.iter().zip(&coarse).zip(&fine) {
        if (a - b).abs() > TOL * scale.max(f64::MIN_POSITIVE) || !b.is_finite() {
            return Err(AflError::Numerical(format!(
                "Hankel quadrature not converged at rho = {rho}: {a:e} vs {b:e} (support truncated at r = {extent})"
            )));
        }
    }
    // the tail beyond the effective support must be negligible too
    let edge = f.value(extent).abs() * extent.powi(n as i32);
    if edge > TOL * scale {
        return Err(AflError::Numerical(format!(
            "profile not negligible at its truncation radius {extent}: |f| r^n = {edge:e}"
        )));
    }
    RadialProfile::sampled(n, freq_grid.to_vec(), fine)
}
