//! Annuli `A_{mu,k} = {2^-mu j_{nu,k-1} <= |x| <= 2^-mu j_{nu,k}}`, `j_{nu,0} = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{AflError, Result};
use crate::spectral::{sphere_area, RadialProfile};
use crate::special::{cached_bessel_zeros, BesselZeroTable};

/// One dyadic band `mu >= 0` and radial index `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameIndex {
    pub mu: u32,
    pub k: u32,
}

impl FrameIndex {
    pub fn new(mu: u32, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(AflError::invalid("radial index k starts at 1"));
        }
        Ok(Self { mu, k })
    }
}

#[derive(Debug, Clone)]
pub struct AnnulusTable {
    n: u32,
    nu: f64,
    zeros: Arc<BesselZeroTable>,
    mu_max: u32,
    k_max: u32,
    omega: f64,
}

impl AnnulusTable {
    pub fn new(n: u32, mu_max: u32, k_max: u32) -> Result<Self> {
        if n < 2 {
            return Err(AflError::invalid("dimension must be at least 2"));
        }
        if k_max == 0 {
            return Err(AflError::invalid("k_max must be at least 1"));
        }
        let nu = 0.5 * (n as f64 - 2.0);
        let zeros = Arc::new(cached_bessel_zeros(nu, k_max as usize)?);
        Ok(Self::with_zeros(n, zeros, mu_max, k_max))
    }

    /// Reuses an existing zero table of order `(n - 2)/2` with at least
    /// `k_max` entries.
    pub fn with_zeros(n: u32, zeros: Arc<BesselZeroTable>, mu_max: u32, k_max: u32) -> Self {
        assert!(zeros.len() >= k_max as usize, "zero table too short");
        Self {
            n,
            nu: zeros.nu(),
            zeros,
            mu_max,
            k_max,
            omega: sphere_area(n),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mu_max(&self) -> u32 {
        self.mu_max
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// `omega_{n-1}`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn zeros(&self) -> &BesselZeroTable {
        &self.zeros
    }

    pub fn shared_zeros(&self) -> Arc<BesselZeroTable> {
        Arc::clone(&self.zeros)
    }

    pub fn check(&self, idx: FrameIndex) -> Result<()> {
        if idx.k == 0 || idx.k > self.k_max || idx.mu > self.mu_max {
            return Err(AflError::IndexOutOfRange {
                mu: idx.mu,
                k: idx.k,
                mu_max: self.mu_max,
                k_max: self.k_max,
            });
        }
        Ok(())
    }

    /// All indices in `mu`-major order.
    pub fn indices(&self) -> impl Iterator<Item = FrameIndex> + '_ {
        (0..=self.mu_max).flat_map(move |mu| (1..=self.k_max).map(move |k| FrameIndex { mu, k }))
    }

    /// `(r_lo, r_hi)` without range checks (indices must be valid).
    pub(crate) fn bounds_unchecked(&self, idx: FrameIndex) -> (f64, f64) {
        let s = (-(idx.mu as f64)).exp2();
        (
            s * self.zeros.zero(idx.k as usize - 1),
            s * self.zeros.zero(idx.k as usize),
        )
    }

    /// Outer radius `2^-mu j_{nu,k_max}` of the covered range at scale `mu`.
    pub fn covered_radius(&self, mu: u32) -> f64 {
        (-(mu as f64)).exp2() * self.zeros.zero(self.k_max as usize)
    }

    /// The `k` whose annulus at scale `mu` contains `r`; boundaries belong to
    /// the lower index. `None` outside the covered range.
    pub fn locate(&self, mu: u32, r: f64) -> Option<u32> {
        let x = r * (mu as f64).exp2();
        let zeros = &self.zeros.zeros()[..self.k_max as usize];
        let k = zeros.partition_point(|&z| z < x) + 1;
        (k <= self.k_max as usize && r >= 0.0).then_some(k as u32)
    }
}

pub fn annulus_bounds(table: &AnnulusTable, idx: FrameIndex) -> Result<(f64, f64)> {
    table.check(idx)?;
    Ok(table.bounds_unchecked(idx))
}

/// Lebesgue measure `omega_{n-1}/n (r_hi^n - r_lo^n)`.
pub fn annulus_measure(table: &AnnulusTable, idx: FrameIndex) -> Result<f64> {
    table.check(idx)?;
    Ok(measure_unchecked(table, idx))
}

pub(crate) fn measure_unchecked(table: &AnnulusTable, idx: FrameIndex) -> f64 {
    let (lo, hi) = table.bounds_unchecked(idx);
    let n = table.n as i32;
    table.omega / table.n as f64 * (hi.powi(n) - lo.powi(n))
}

/// `|A|^{-1/2}` times the indicator of the annulus.
pub fn indicator_profile(table: &AnnulusTable, idx: FrameIndex) -> Result<RadialProfile> {
    let (lo, hi) = annulus_bounds(table, idx)?;
    let m = measure_unchecked(table, idx);
    RadialProfile::indicator(table.n, lo, hi, m.powf(-0.5))
}
