//! Positive zeros `j_{nu,k}` of `J_nu`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::{check_order, j_derivative, j_unchecked};
use crate::error::{AflError, Result};

/// Increasing positive zeros `j_{nu,1} < ... < j_{nu,K}` of `J_nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselZeroTable {
    nu: f64,
    zeros: Vec<f64>,
}

impl BesselZeroTable {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// `j_{nu,k}` for `k >= 1`; `k = 0` returns the convention `j_{nu,0} = 0`.
    ///
    /// # Panics
    /// If `k` exceeds the table length.
    pub fn zero(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.zeros[k - 1]
        }
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Re-checks residual, monotonicity and asymptotic spacing. Used when a
    /// table is loaded from disk.
    pub fn validate(&self) -> Result<()> {
        check_order(self.nu)?;
        for (i, &z) in self.zeros.iter().enumerate() {
            let r = j_unchecked(self.nu, z).abs();
            if !(z > 0.0) || r >= 1e-10 {
                return Err(AflError::Numerical(format!(
                    "zero {} of J_{} fails residual check: |J({z})| = {r:e}",
                    i + 1,
                    self.nu
                )));
            }
            if i > 0 && z <= self.zeros[i - 1] {
                return Err(AflError::Numerical(format!(
                    "zero table for J_{} is not strictly increasing at k = {}",
                    self.nu,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Extends the table in place to `count` zeros.
    pub fn extend_to(&mut self, count: usize) -> Result<()> {
        while self.zeros.len() < count {
            let k = self.zeros.len() + 1;
            let prev = self.zeros.last().copied().unwrap_or(0.0);
            let z = locate_zero(self.nu, k, prev)?;
            self.zeros.push(z);
        }
        Ok(())
    }
}

/// First `count` positive zeros of `J_nu`.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<BesselZeroTable> {
    check_order(nu)?;
    if count == 0 {
        return Err(AflError::invalid("zero count must be at least 1"));
    }
    let mut table = BesselZeroTable {
        nu,
        zeros: Vec::with_capacity(count),
    };
    table.extend_to(count)?;
    Ok(table)
}

/// McMahon's expansion for large `k`.
pub(crate) fn mcmahon(nu: f64, k: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let b8 = 8.0 * beta;
    beta - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8.powi(5))
}

fn newton(nu: f64, mut x: f64) -> Option<f64> {
    for _ in 0..60 {
        let f = j_unchecked(nu, x);
        let d = j_derivative(nu, x);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let step = f / d;
        if step.abs() > 1.5 {
            return None;
        }
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x {
            // one more step to settle the last bit
            let f = j_unchecked(nu, x);
            let d = j_derivative(nu, x);
            return Some(x - f / d);
        }
    }
    None
}

fn locate_zero(nu: f64, k: usize, prev: f64) -> Result<f64> {
    // No two consecutive zeros are closer than ~2.9, so an accepted root with
    // a gap below 2 * 2.9 cannot have skipped one.
    if k > 1 {
        if let Some(z) = newton(nu, mcmahon(nu, k)) {
            let gap = z - prev;
            if gap > 2.0 && gap < PI + 0.6 {
                return Ok(z);
            }
        }
    }
    // J_nu has no zeros in (0, nu]
    let start = if k == 1 { nu.max(1.0) } else { prev + 0.5 };
    scan_and_bisect(nu, k, start)
}

fn scan_and_bisect(nu: f64, k: usize, start: f64) -> Result<f64> {
    const STEP: f64 = 0.5;
    let mut a = start;
    let mut fa = j_unchecked(nu, a);
    for _ in 0..100_000 {
        let b = a + STEP;
        let fb = j_unchecked(nu, b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = j_unchecked(nu, mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-6 {
                    break;
                }
            }
            let mid = 0.5 * (lo + hi);
            return Ok(newton(nu, mid)
                .filter(|z| *z > lo - 1e-6 && *z < hi + 1e-6)
                .unwrap_or(mid));
        }
        a = b;
        fa = fb;
    }
    Err(AflError::ZeroBracketing { nu, k })
}
