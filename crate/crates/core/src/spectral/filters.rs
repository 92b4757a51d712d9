//! Littlewood–Paley cutoffs, the squared frame system and sampled filter banks.

use serde::{Deserialize, Serialize};

use crate::error::{AflError, Result};

/// Dilation that moves the squared system's bands into `(1/4, 1) * 2^mu`.
pub const FRAME_ALIGNMENT: f64 = 0.29;

/// Tolerance on the sampled partition identities.
pub const PARTITION_TOLERANCE: f64 = 1e-10;

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// `C^inf` step: 1 for `t <= 0`, 0 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - t);
        a / (a + h(t))
    }
}

/// Base cutoff: 1 on `[0, 1]`, 0 on `[3/2, inf)`.
pub fn lp_cutoff(rho: f64) -> f64 {
    smooth_step(2.0 * (rho - 1.0))
}

/// `phi_mu` of the Littlewood–Paley system.
pub fn lp_band(mu: u32, rho: f64) -> f64 {
    let rho = rho.abs();
    if mu == 0 {
        return lp_cutoff(rho);
    }
    let s = (-(mu as f64)).exp2() * rho;
    let v = lp_cutoff(s) - lp_cutoff(2.0 * s);
    v.max(0.0)
}

/// Closed support `[lo, hi]` of `phi_mu`.
pub fn lp_band_support(mu: u32) -> (f64, f64) {
    if mu == 0 {
        (0.0, 1.5)
    } else {
        let s = (mu as f64).exp2();
        (0.5 * s, 1.5 * s)
    }
}

/// `psi_mu = phi_mu / sqrt(sum_m phi_m^2)`; the squares sum to one.
fn squared_system(mu: u32, eta: f64) -> f64 {
    let v = lp_band(mu, eta);
    if v == 0.0 {
        return 0.0;
    }
    // at most three bands overlap any frequency
    let lo = mu.saturating_sub(1);
    let q: f64 = (lo..=mu + 1).map(|m| lp_band(m, eta).powi(2)).sum();
    v / q.sqrt()
}

/// Frame band `theta_mu` (`Phi` for `mu = 0`), aligned by `FRAME_ALIGNMENT`.
pub fn frame_band(mu: u32, rho: f64) -> f64 {
    squared_system(mu, rho.abs() / (2.0 * FRAME_ALIGNMENT))
}

/// Closed support of the frame band `mu`.
pub fn frame_band_support(mu: u32) -> (f64, f64) {
    let (lo, hi) = lp_band_support(mu);
    (2.0 * FRAME_ALIGNMENT * lo, 2.0 * FRAME_ALIGNMENT * hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankVariant {
    /// `sum phi_mu = 1`.
    Lp,
    /// `Phi^2 + sum theta_mu^2 = 1`.
    Frame,
}

impl BankVariant {
    pub fn band(self, mu: u32, rho: f64) -> f64 {
        match self {
            BankVariant::Lp => lp_band(mu, rho),
            BankVariant::Frame => frame_band(mu, rho),
        }
    }

    pub fn support(self, mu: u32) -> (f64, f64) {
        match self {
            BankVariant::Lp => lp_band_support(mu),
            BankVariant::Frame => frame_band_support(mu),
        }
    }

    /// Frequencies up to which the truncated partition is exact.
    pub fn covered_limit(self, mu_max: u32) -> f64 {
        let top = (mu_max as f64).exp2();
        match self {
            BankVariant::Lp => top,
            BankVariant::Frame => 2.0 * FRAME_ALIGNMENT * top,
        }
    }
}

/// A filter bank sampled on a frequency grid, with its verified partition
/// residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBank {
    pub variant: BankVariant,
    pub n: u32,
    pub mu_max: u32,
    pub freq_grid: Vec<f64>,
    /// `samples[mu][i]` is band `mu` at `freq_grid[i]`.
    pub samples: Vec<Vec<f64>>,
    /// Worst partition residual over grid points in the covered band.
    pub residual: f64,
    pub alignment: Option<f64>,
}

impl FilterBank {
    pub fn band(&self, mu: u32, rho: f64) -> f64 {
        self.variant.band(mu, rho)
    }

    pub fn support(&self, mu: u32) -> (f64, f64) {
        self.variant.support(mu)
    }

    pub fn covered_limit(&self) -> f64 {
        self.variant.covered_limit(self.mu_max)
    }

    /// Truncated partition sum at `rho` (squares for the frame variant).
    pub fn partition_sum(&self, rho: f64) -> f64 {
        partition_sum(self.variant, self.mu_max, rho)
    }
}

fn partition_sum(variant: BankVariant, mu_max: u32, rho: f64) -> f64 {
    match variant {
        BankVariant::Lp => (0..=mu_max).map(|m| lp_band(m, rho)).sum(),
        BankVariant::Frame => (0..=mu_max).map(|m| frame_band(m, rho).powi(2)).sum(),
    }
}

/// Log-uniform frequency grid with `per_octave` points per octave on
/// `[2^-6, 2^(mu_max+1)]`, plus the origin.
pub fn default_freq_grid(mu_max: u32, per_octave: usize) -> Vec<f64> {
    let lo = -6.0;
    let hi = mu_max as f64 + 1.0;
    let count = ((hi - lo) * per_octave as f64).round() as usize;
    let mut grid = Vec::with_capacity(count + 2);
    grid.push(0.0);
    for i in 0..=count {
        grid.push((lo + (hi - lo) * i as f64 / count as f64).exp2());
    }
    grid
}

/// Samples a bank on `freq_grid` and checks its invariants.
pub fn build_filter_bank(
    variant: BankVariant,
    n: u32,
    mu_max: u32,
    freq_grid: &[f64],
) -> Result<FilterBank> {
    if mu_max < 1 {
        return Err(AflError::invalid("mu_max must be at least 1"));
    }
    if n < 2 {
        return Err(AflError::invalid("dimension must be at least 2"));
    }
    if freq_grid.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(AflError::invalid("frequency grid must be finite and nonnegative"));
    }
    let samples: Vec<Vec<f64>> = (0..=mu_max)
        .map(|m| freq_grid.iter().map(|&r| variant.band(m, r)).collect())
        .collect();
    let limit = variant.covered_limit(mu_max);
    let mut residual: f64 = 0.0;
    for (i, &rho) in freq_grid.iter().enumerate() {
        let mut sum = 0.0;
        for (m, row) in samples.iter().enumerate() {
            let v = row[i];
            if !(0.0..=1.0).contains(&v) {
                return Err(AflError::Numerical(format!(
                    "band {m} takes value {v} outside [0, 1] at {rho}"
                )));
            }
            let (lo, hi) = variant.support(m as u32);
            if v != 0.0 && (rho < lo || rho > hi) {
                return Err(AflError::Numerical(format!(
                    "band {m} nonzero outside its support at {rho}"
                )));
            }
            sum += match variant {
                BankVariant::Lp => v,
                BankVariant::Frame => v * v,
            };
        }
        if rho <= limit {
            residual = residual.max((sum - 1.0).abs());
        }
    }
    if residual > PARTITION_TOLERANCE {
        return Err(AflError::PartitionResidual {
            residual,
            tolerance: PARTITION_TOLERANCE,
        });
    }
    Ok(FilterBank {
        variant,
        n,
        mu_max,
        freq_grid: freq_grid.to_vec(),
        samples,
        residual,
        alignment: (variant == BankVariant::Frame).then_some(FRAME_ALIGNMENT),
    })
}
