//! One-variable radial profiles `f(x) = f_0(|x|)` on `R^n`.

use serde::{Deserialize, Serialize};

use super::filters::{frame_band, frame_band_support, lp_band, lp_band_support};
use super::hankel::{forward_constant, forward_numeric, inverse_numeric, order, sphere_area};
use crate::error::{AflError, Result};
use crate::frame::{CoefficientGrid, Frame};
use crate::special::j_scaled;

/// Values below this fraction of the peak are treated as zero when sizing
/// supports of non-compact profiles.
const NEGLIGIBLE: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear in `log r`.
    #[default]
    LogLinear,
    /// Linear in `(log r, log f)`; exact on power laws, needs positive values.
    LogLog,
}

/// A band multiplier applied on the frequency side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bank", rename_all = "snake_case")]
pub enum BandFilter {
    Lp { mu: u32 },
    Frame { mu: u32 },
}

impl BandFilter {
    pub fn multiplier(&self, rho: f64) -> f64 {
        match *self {
            BandFilter::Lp { mu } => lp_band(mu, rho),
            BandFilter::Frame { mu } => frame_band(mu, rho),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            BandFilter::Lp { mu } => lp_band_support(mu),
            BandFilter::Frame { mu } => frame_band_support(mu),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub profile: ProfileForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileForm {
    Zero,
    /// `exp(-(scale r)^2 / 2)`.
    Gaussian { scale: f64 },
    /// Smooth bump `exp(1 - 1/(1 - u^2))`, `u = (r - center)/width`.
    ShellBump { center: f64, width: f64 },
    /// `(1 - (r/radius)^2)_+^power`.
    PowerBump { power: f64, radius: f64 },
    /// `height` on `[r_lo, r_hi]`.
    Indicator { r_lo: f64, r_hi: f64, height: f64 },
    /// Frequency-side bump `exp(1 - 1/(1 - u^2))`, `u = (rho - center)/width`.
    BandBump { center: f64, width: f64 },
    /// Samples on an increasing positive grid, zero outside it.
    Sampled {
        r: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Combination { terms: Vec<Term> },
    Filtered {
        source: Box<ProfileForm>,
        filter: BandFilter,
    },
    /// Frame expansion `sum lambda_{mu k} psi_{mu k}`.
    Synthesized { coefficients: CoefficientGrid },
}

/// A radial function on `R^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: u32,
    #[serde(flatten)]
    pub form: ProfileForm,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

impl RadialProfile {
    pub fn new(n: u32, form: ProfileForm) -> Result<Self> {
        let p = Self { n, form };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(n: u32) -> Self {
        Self {
            n,
            form: ProfileForm::Zero,
        }
    }

    pub fn gaussian(n: u32, scale: f64) -> Result<Self> {
        Self::new(n, ProfileForm::Gaussian { scale })
    }

    pub fn indicator(n: u32, r_lo: f64, r_hi: f64, height: f64) -> Result<Self> {
        Self::new(n, ProfileForm::Indicator { r_lo, r_hi, height })
    }

    pub fn sampled(n: u32, r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(
            n,
            ProfileForm::Sampled {
                r,
                values,
                interpolation: Interpolation::LogLinear,
            },
        )
    }

    /// Samples `f` on a log-uniform grid of `count` points over `[r_min, r_max]`.
    pub fn sample_log_uniform(
        n: u32,
        r_min: f64,
        r_max: f64,
        count: usize,
        interpolation: Interpolation,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || count < 2 {
            return Err(AflError::invalid("log-uniform grid needs 0 < r_min < r_max and 2+ points"));
        }
        let step = (r_max / r_min).ln() / (count - 1) as f64;
        let r: Vec<f64> = (0..count)
            .map(|i| {
                if i + 1 == count {
                    r_max
                } else {
                    r_min * (step * i as f64).exp()
                }
            })
            .collect();
        let values = r.iter().map(|&x| f(x)).collect();
        Self::new(
            n,
            ProfileForm::Sampled {
                r,
                values,
                interpolation,
            },
        )
    }

    pub fn filtered(&self, filter: BandFilter) -> Self {
        Self {
            n: self.n,
            form: ProfileForm::Filtered {
                source: Box::new(self.form.clone()),
                filter,
            },
        }
    }

    /// `sum c_i f_i`; all terms must share the dimension.
    pub fn combination(terms: &[(f64, &RadialProfile)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|t| t.1.n)
            .ok_or_else(|| AflError::invalid("empty combination"))?;
        if terms.iter().any(|t| t.1.n != n) {
            return Err(AflError::invalid("combined profiles must share the dimension"));
        }
        Self::new(
            n,
            ProfileForm::Combination {
                terms: terms
                    .iter()
                    .map(|(c, p)| Term {
                        coefficient: *c,
                        profile: p.form.clone(),
                    })
                    .collect(),
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || order(self.n) > crate::special::MAX_ORDER {
            return Err(AflError::invalid(format!("unsupported dimension {}", self.n)));
        }
        self.form.validate(self.n)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.form.value(self.n, r)
    }

    /// `f^(rho)` under the global convention.
    pub fn spectrum(&self, rho: f64) -> f64 {
        self.form.spectrum(self.n, rho)
    }

    /// Radius beyond which the profile is zero or negligible.
    pub fn space_extent(&self) -> f64 {
        self.form.space_extent(self.n)
    }

    /// Radii where the profile is not smooth.
    pub fn space_breaks(&self) -> Vec<f64> {
        let mut b = self.form.space_breaks();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Shortest length on which the profile varies appreciably.
    pub fn length_scale(&self) -> f64 {
        self.form.length_scale(self.n)
    }

    /// Compact frequency support, if band-limited.
    pub fn freq_support(&self) -> Option<(f64, f64)> {
        self.form.freq_support()
    }

    /// Frequency beyond which the spectrum is negligible, if it decays fast.
    pub fn freq_extent(&self) -> Option<f64> {
        self.form.freq_extent()
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    /// `||f||_{L^2(R^n)}` from the frequency side when the spectrum is
    /// confined, otherwise from the space side.
    pub fn l2_norm(&self) -> f64 {
        crate::spectral::norms::l2_norm(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(AflError::invalid(format!("{name} must be finite")))
    }
}

impl ProfileForm {
    fn validate(&self, n: u32) -> Result<()> {
        match self {
            ProfileForm::Zero => Ok(()),
            ProfileForm::Gaussian { scale } => {
                finite("scale", *scale)?;
                if *scale <= 0.0 {
                    return Err(AflError::invalid("Gaussian scale must be positive"));
                }
                Ok(())
            }
            ProfileForm::ShellBump { center, width } | ProfileForm::BandBump { center, width } => {
                finite("center", *center)?;
                finite("width", *width)?;
                if *width <= 0.0 || *center < 0.0 {
                    return Err(AflError::invalid("bump needs width > 0 and center >= 0"));
                }
                Ok(())
            }
            ProfileForm::PowerBump { power, radius } => {
                finite("power", *power)?;
                finite("radius", *radius)?;
                if *radius <= 0.0 || *power < 0.0 {
                    return Err(AflError::invalid("power bump needs radius > 0 and power >= 0"));
                }
                if order(n) + power + 1.0 > crate::special::MAX_ORDER {
                    return Err(AflError::invalid("power bump order exceeds the Bessel range"));
                }
                Ok(())
            }
            ProfileForm::Indicator { r_lo, r_hi, height } => {
                finite("r_hi", *r_hi)?;
                finite("height", *height)?;
                if !(*r_lo >= 0.0 && r_hi > r_lo) {
                    return Err(AflError::invalid("indicator needs 0 <= r_lo < r_hi"));
                }
                Ok(())
            }
            ProfileForm::Sampled {
                r,
                values,
                interpolation,
            } => {
                if r.len() != values.len() || r.len() < 2 {
                    return Err(AflError::invalid("sampled profile needs matching r/values, 2+ points"));
                }
                if r[0] <= 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(AflError::invalid("sample grid must be positive and strictly increasing"));
                }
                if r.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(AflError::invalid("sampled profile has non-finite entries"));
                }
                if *interpolation == Interpolation::LogLog && values.iter().any(|v| *v <= 0.0) {
                    return Err(AflError::invalid("log-log interpolation needs positive values"));
                }
                Ok(())
            }
            ProfileForm::Combination { terms } => {
                for t in terms {
                    finite("coefficient", t.coefficient)?;
                    t.profile.validate(n)?;
                }
                Ok(())
            }
            ProfileForm::Filtered { source, .. } => source.validate(n),
            ProfileForm::Synthesized { coefficients } => {
                if coefficients.n != n {
                    return Err(AflError::invalid("coefficient grid dimension mismatch"));
                }
                coefficients.validate()
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            ProfileForm::Zero => true,
            ProfileForm::Indicator { height, .. } => *height == 0.0,
            ProfileForm::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
            ProfileForm::Combination { terms } => terms
                .iter()
                .all(|t| t.coefficient == 0.0 || t.profile.is_zero()),
            ProfileForm::Filtered { source, .. } => source.is_zero(),
            ProfileForm::Synthesized { coefficients } => coefficients.is_zero(),
            _ => false,
        }
    }

    fn value(&self, n: u32, r: f64) -> f64 {
        let r = r.abs();
        match self {
            ProfileForm::Zero => 0.0,
            ProfileForm::Gaussian { scale } => (-0.5 * (scale * r).powi(2)).exp(),
            ProfileForm::ShellBump { center, width } => bump((r - center) / width),
            ProfileForm::PowerBump { power, radius } => {
                let u = r / radius;
                if u >= 1.0 {
                    0.0
                } else {
                    (1.0 - u * u).powf(*power)
                }
            }
            ProfileForm::Indicator { r_lo, r_hi, height } => {
                // boundaries belong to the annulus
                if r >= *r_lo && r <= *r_hi {
                    *height
                } else {
                    0.0
                }
            }
            ProfileForm::Sampled {
                r: grid,
                values,
                interpolation,
            } => sampled_value(grid, values, *interpolation, r),
            ProfileForm::Combination { terms } => terms
                .iter()
                .map(|t| t.coefficient * t.profile.value(n, r))
                .sum(),
            ProfileForm::Synthesized { coefficients } => match Frame::shared_for(coefficients) {
                Ok(frame) => frame.synthesized_value(coefficients, r),
                Err(_) => f64::NAN,
            },
            ProfileForm::BandBump { .. } | ProfileForm::Filtered { .. } => {
                let (lo, hi) = self.freq_support().unwrap_or((0.0, 0.0));
                let breaks = self.freq_breaks();
                inverse_numeric(|rho| self.spectrum(n, rho), n, lo, hi, &breaks, r)
            }
        }
    }

    fn spectrum(&self, n: u32, rho: f64) -> f64 {
        let rho = rho.abs();
        let c = forward_constant(n);
        let nu = order(n);
        match self {
            ProfileForm::Zero => 0.0,
            ProfileForm::Gaussian { scale } => {
                c * scale.powi(-(n as i32)) * (-0.5 * (rho / scale).powi(2)).exp()
            }
            ProfileForm::PowerBump { power, radius } => {
                // Sonine's integral
                let m = nu + power + 1.0;
                c * radius.powi(n as i32)
                    * 2f64.powf(*power)
                    * libm::tgamma(power + 1.0)
                    * j_scaled(m, radius * rho)
            }
            ProfileForm::Indicator { r_lo, r_hi, height } => {
                let part = |b: f64| b.powi(n as i32) * j_scaled(nu + 1.0, b * rho);
                c * height * (part(*r_hi) - if *r_lo > 0.0 { part(*r_lo) } else { 0.0 })
            }
            ProfileForm::ShellBump { center, width } => {
                let lo = (center - width).max(0.0);
                let hi = center + width;
                forward_numeric(|r| self.value(n, r), n, lo, hi, &[*center], rho)
            }
            ProfileForm::Sampled { r, .. } => {
                let lo = r[0];
                let hi = *r.last().unwrap_or(&lo);
                forward_numeric(|x| self.value(n, x), n, lo, hi, r, rho)
            }
            ProfileForm::BandBump { center, width } => bump((rho - center) / width),
            ProfileForm::Combination { terms } => terms
                .iter()
                .map(|t| t.coefficient * t.profile.spectrum(n, rho))
                .sum(),
            ProfileForm::Filtered { source, filter } => {
                let m = filter.multiplier(rho);
                if m == 0.0 {
                    0.0
                } else {
                    m * source.spectrum(n, rho)
                }
            }
            ProfileForm::Synthesized { coefficients } => match Frame::shared_for(coefficients) {
                Ok(frame) => frame.synthesized_spectrum(coefficients, rho),
                Err(_) => f64::NAN,
            },
        }
    }

    fn space_extent(&self, n: u32) -> f64 {
        match self {
            ProfileForm::Zero => 0.0,
            ProfileForm::Gaussian { scale } => (-2.0 * NEGLIGIBLE.ln()).sqrt() / scale,
            ProfileForm::ShellBump { center, width } => center + width,
            ProfileForm::PowerBump { radius, .. } => *radius,
            ProfileForm::Indicator { r_hi, .. } => *r_hi,
            ProfileForm::Sampled { r, .. } => *r.last().unwrap_or(&0.0),
            ProfileForm::BandBump { width, .. } => 400.0 / width,
            ProfileForm::Combination { terms } => terms
                .iter()
                .map(|t| t.profile.space_extent(n))
                .fold(0.0, f64::max),
            ProfileForm::Filtered { source, filter } => {
                // the filter kernel spreads by a few of its own wavelengths
                let (_, hi) = filter.support();
                source.space_extent(n) + 400.0 / hi
            }
            ProfileForm::Synthesized { coefficients } => match Frame::shared_for(coefficients) {
                Ok(frame) => frame.synthesized_extent(coefficients),
                Err(_) => 0.0,
            },
        }
    }

    fn space_breaks(&self) -> Vec<f64> {
        match self {
            ProfileForm::ShellBump { center, width } => {
                vec![(center - width).max(0.0), *center, center + width]
            }
            ProfileForm::PowerBump { radius, .. } => vec![*radius],
            ProfileForm::Indicator { r_lo, r_hi, .. } => vec![*r_lo, *r_hi],
            ProfileForm::Sampled { r, .. } => r.clone(),
            ProfileForm::Combination { terms } => {
                terms.iter().flat_map(|t| t.profile.space_breaks()).collect()
            }
            _ => Vec::new(),
        }
    }

    fn length_scale(&self, n: u32) -> f64 {
        match self {
            ProfileForm::Zero => 1.0,
            ProfileForm::Gaussian { scale } => 1.0 / scale,
            ProfileForm::ShellBump { width, .. } => width / 4.0,
            ProfileForm::PowerBump { radius, .. } => radius / 8.0,
            ProfileForm::Indicator { r_lo, r_hi, .. } => r_hi - r_lo,
            ProfileForm::Sampled { r, .. } => *r.last().unwrap_or(&1.0),
            ProfileForm::Combination { terms } => terms
                .iter()
                .map(|t| t.profile.length_scale(n))
                .fold(f64::INFINITY, f64::min),
            ProfileForm::BandBump { .. } | ProfileForm::Synthesized { .. } => {
                let (_, hi) = self.freq_support().unwrap_or((0.0, 1.0));
                1.0 / hi.max(1e-300)
            }
            ProfileForm::Filtered { source, filter } => {
                let (_, hi) = filter.support();
                source.length_scale(n).min(1.0 / hi)
            }
        }
    }

    fn freq_support(&self) -> Option<(f64, f64)> {
        match self {
            ProfileForm::Zero => Some((0.0, 0.0)),
            ProfileForm::BandBump { center, width } => Some(((center - width).max(0.0), center + width)),
            ProfileForm::Filtered { source, filter } => {
                let (lo, hi) = filter.support();
                match source.freq_support() {
                    Some((a, b)) => Some((lo.max(a), hi.min(b).max(lo.max(a)))),
                    None => Some((lo, hi)),
                }
            }
            ProfileForm::Combination { terms } => {
                let mut out: Option<(f64, f64)> = None;
                for t in terms {
                    let s = t.profile.freq_support()?;
                    out = Some(match out {
                        None => s,
                        Some((a, b)) => (a.min(s.0), b.max(s.1)),
                    });
                }
                out.or(Some((0.0, 0.0)))
            }
            ProfileForm::Synthesized { coefficients } => {
                Frame::shared_for(coefficients).ok().map(|f| f.synthesized_support(coefficients))
            }
            _ => None,
        }
    }

    fn freq_breaks(&self) -> Vec<f64> {
        match self {
            ProfileForm::Filtered { source, filter } => {
                let (lo, hi) = filter.support();
                let mut b = vec![lo, hi];
                b.extend(source.freq_breaks());
                b
            }
            ProfileForm::BandBump { center, .. } => vec![*center],
            ProfileForm::Combination { terms } => {
                terms.iter().flat_map(|t| t.profile.freq_breaks()).collect()
            }
            ProfileForm::Synthesized { coefficients } => (0..=coefficients.mu_max)
                .flat_map(|m| {
                    let (lo, hi) = frame_band_support(m);
                    [lo, hi]
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn freq_extent(&self) -> Option<f64> {
        if let Some((_, hi)) = self.freq_support() {
            return Some(hi);
        }
        match self {
            ProfileForm::Gaussian { scale } => Some(scale * (-2.0 * NEGLIGIBLE.ln()).sqrt()),
            ProfileForm::Combination { terms } => terms
                .iter()
                .map(|t| t.profile.freq_extent())
                .try_fold(0.0, |m: f64, e| e.map(|e| m.max(e))),
            _ => None,
        }
    }
}

fn sampled_value(grid: &[f64], values: &[f64], interp: Interpolation, r: f64) -> f64 {
    let last = grid.len() - 1;
    if r < grid[0] || r > grid[last] {
        return 0.0;
    }
    if r == grid[last] {
        return values[last];
    }
    let i = grid.partition_point(|&x| x <= r) - 1;
    let t = (r / grid[i]).ln() / (grid[i + 1] / grid[i]).ln();
    match interp {
        Interpolation::LogLinear => values[i] + t * (values[i + 1] - values[i]),
        Interpolation::LogLog => (values[i].ln() + t * (values[i + 1] / values[i]).ln()).exp(),
    }
}

/// `sigma_t^(rho)`: transform of the normalized surface measure of the sphere
/// of radius `t`, `(2 pi)^(n/2) t^(n-1) (t rho)^-nu J_nu(t rho)`.
pub fn sphere_measure_spectrum(n: u32, t: f64, rho: f64) -> f64 {
    forward_constant(n) * t.powi(n as i32 - 1) * j_scaled(order(n), t * rho)
}

/// Total mass `omega_{n-1} t^(n-1)` of the sphere measure.
pub fn sphere_measure_mass(n: u32, t: f64) -> f64 {
    sphere_area(n) * t.powi(n as i32 - 1)
}
