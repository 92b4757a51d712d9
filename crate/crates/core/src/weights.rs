//! Radial weights, annulus masses and the radial `A_p` / product-lemma
//! diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annuli::{measure_unchecked, AnnulusTable, FrameIndex};
use crate::error::{AflError, Result};
use crate::quadrature::adaptive_gk15;
use crate::spectral::{sphere_area, Interpolation, ProfileForm, RadialProfile};

const QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum WeightKind {
    /// `|x|^gamma`.
    Power { gamma: f64 },
    /// `|x|^alpha` for `|x| <= 1`, `|x|^beta` beyond.
    TwoRegime { alpha: f64, beta: f64 },
    /// Positive samples of `w_0(r)`; power-law extrapolation past both ends.
    Tabulated { profile: RadialProfile },
}

/// A radial weight `w(x) = w_0(|x|)` on `R^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    /// Filled in from the enclosing space parameters when omitted.
    #[serde(default)]
    pub n: u32,
    #[serde(flatten)]
    pub kind: WeightKind,
}

impl WeightSpec {
    pub fn power(n: u32, gamma: f64) -> Result<Self> {
        Self::new(n, WeightKind::Power { gamma })
    }

    pub fn two_regime(n: u32, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(n, WeightKind::TwoRegime { alpha, beta })
    }

    pub fn unweighted(n: u32) -> Self {
        Self {
            n,
            kind: WeightKind::Power { gamma: 0.0 },
        }
    }

    /// A tabulated weight sampled on a log-uniform grid with log-log
    /// interpolation.
    pub fn tabulated(n: u32, r_min: f64, r_max: f64, count: usize, w: impl Fn(f64) -> f64) -> Result<Self> {
        let profile = RadialProfile::sample_log_uniform(n, r_min, r_max, count, Interpolation::LogLog, w)?;
        Self::new(n, WeightKind::Tabulated { profile })
    }

    pub fn new(n: u32, kind: WeightKind) -> Result<Self> {
        let w = Self { n, kind };
        w.validate()?;
        Ok(w)
    }

    /// Copy with the dimension set (used when the JSON omits it).
    pub fn with_dimension(&self, n: u32) -> Result<Self> {
        if self.n != 0 && self.n != n {
            return Err(AflError::invalid(format!(
                "weight dimension {} does not match space dimension {n}",
                self.n
            )));
        }
        let mut w = self.clone();
        w.n = n;
        if let WeightKind::Tabulated { profile } = &mut w.kind {
            profile.n = n;
        }
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(AflError::invalid("weight dimension must be at least 2"));
        }
        let n = self.n as f64;
        match &self.kind {
            WeightKind::Power { gamma } => {
                if !(gamma.is_finite() && *gamma > -n) {
                    return Err(AflError::invalid(format!("power weight needs gamma > -n, got {gamma}")));
                }
            }
            WeightKind::TwoRegime { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && *alpha > -n && *beta > -n) {
                    return Err(AflError::invalid("two-regime weight needs alpha, beta > -n"));
                }
            }
            WeightKind::Tabulated { profile } => {
                profile.validate()?;
                match &profile.form {
                    ProfileForm::Sampled { values, r, .. } => {
                        if values.iter().any(|v| *v <= 0.0) {
                            return Err(AflError::invalid("tabulated weight must be positive"));
                        }
                        let (s0, s1) = end_slopes(r, values);
                        if s0 <= -n {
                            return Err(AflError::invalid(
                                "tabulated weight is not integrable at the origin",
                            ));
                        }
                        let _ = s1;
                    }
                    _ => return Err(AflError::invalid("tabulated weight must be a sampled profile")),
                }
            }
        }
        Ok(())
    }

    pub fn is_unweighted(&self) -> bool {
        matches!(self.kind, WeightKind::Power { gamma } if gamma == 0.0)
            || matches!(self.kind, WeightKind::TwoRegime { alpha, beta } if alpha == 0.0 && beta == 0.0)
    }

    /// `w_0(r)`.
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            WeightKind::Power { gamma } => r.powf(*gamma),
            WeightKind::TwoRegime { alpha, beta } => {
                if r <= 1.0 {
                    r.powf(*alpha)
                } else {
                    r.powf(*beta)
                }
            }
            WeightKind::Tabulated { profile } => tabulated_value(profile, r),
        }
    }

    /// Power-law exponents `(inner, outer)` on `r <= 1` and `r > 1`, when the
    /// weight is piecewise power.
    pub(crate) fn exponents(&self) -> Option<(f64, f64)> {
        match self.kind {
            WeightKind::Power { gamma } => Some((gamma, gamma)),
            WeightKind::TwoRegime { alpha, beta } => Some((alpha, beta)),
            WeightKind::Tabulated { .. } => None,
        }
    }

    /// Radii where the weight is not smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match &self.kind {
            WeightKind::Power { .. } => Vec::new(),
            WeightKind::TwoRegime { .. } => vec![1.0],
            WeightKind::Tabulated { profile } => profile.space_breaks(),
        }
    }

    /// Radius past which the weight's large-`r` behaviour has set in.
    pub fn feature_radius(&self) -> f64 {
        match &self.kind {
            WeightKind::Power { .. } => 0.0,
            WeightKind::TwoRegime { .. } => 1.0,
            WeightKind::Tabulated { profile } => profile.space_extent(),
        }
    }

    /// `omega_{n-1} int_a^b w_0(r) r^(n-1) dr`.
    pub fn shell_integral(&self, a: f64, b: f64) -> Result<f64> {
        let omega = sphere_area(self.n);
        match self.exponents() {
            Some((inner, outer)) => Ok(omega * piecewise_power_integral(self.n, inner, outer, a, b)),
            None => Ok(omega * self.numeric_integral(a, b, |r| self.value(r))?),
        }
    }

    fn numeric_integral(&self, a: f64, b: f64, g: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
        let n = self.n as i32;
        let mut points = vec![a];
        points.extend(self.breaks().into_iter().filter(|x| *x > a && *x < b));
        points.push(b);
        let mut total = 0.0;
        for w in points.windows(2) {
            total += adaptive_gk15(|r| g(r) * r.powi(n - 1), w[0], w[1], QUAD_TOL, 0.0)?;
        }
        Ok(total)
    }
}

fn end_slopes(r: &[f64], v: &[f64]) -> (f64, f64) {
    let k = r.len() - 1;
    let s0 = (v[1] / v[0]).ln() / (r[1] / r[0]).ln();
    let s1 = (v[k] / v[k - 1]).ln() / (r[k] / r[k - 1]).ln();
    (s0, s1)
}

fn tabulated_value(profile: &RadialProfile, r: f64) -> f64 {
    if let ProfileForm::Sampled { r: grid, values, .. } = &profile.form {
        let last = grid.len() - 1;
        let (s0, s1) = end_slopes(grid, values);
        if r < grid[0] {
            return values[0] * (r / grid[0]).powf(s0);
        }
        if r > grid[last] {
            return values[last] * (r / grid[last]).powf(s1);
        }
    }
    profile.value(r)
}

/// `int_a^b r^(e+n-1) dr`, infinite when divergent at the origin.
fn power_integral(n: u32, e: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let s = e + n as f64;
    if s == 0.0 {
        if a == 0.0 {
            f64::INFINITY
        } else {
            (b / a).ln()
        }
    } else if a == 0.0 && s < 0.0 {
        f64::INFINITY
    } else {
        (b.powf(s) - a.powf(s)) / s
    }
}

fn piecewise_power_integral(n: u32, inner: f64, outer: f64, a: f64, b: f64) -> f64 {
    if inner == outer {
        return power_integral(n, inner, a, b);
    }
    power_integral(n, inner, a.min(1.0), b.min(1.0)) + power_integral(n, outer, a.max(1.0), b.max(1.0))
}

/// `int_{A_{mu k}} w dx`.
pub fn annulus_weight_integral(w: &WeightSpec, table: &AnnulusTable, idx: FrameIndex) -> Result<f64> {
    table.check(idx)?;
    check_dims(w, table)?;
    let (lo, hi) = table.bounds_unchecked(idx);
    w.shell_integral(lo, hi)
}

fn check_dims(w: &WeightSpec, table: &AnnulusTable) -> Result<()> {
    if w.n != table.n() {
        return Err(AflError::invalid("weight and annulus table dimensions differ"));
    }
    Ok(())
}

/// `|| |A|^{-1/2} chi_A ||_{L^p(w)} = |A|^{-1/2} (int_A w)^{1/p}`.
pub fn weighted_mass(w: &WeightSpec, p: f64, table: &AnnulusTable, idx: FrameIndex) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(AflError::invalid(format!("exponent p = {p} must be >= 1")));
    }
    table.check(idx)?;
    check_dims(w, table)?;
    mass_unchecked(w, p, table, idx)
}

fn mass_unchecked(w: &WeightSpec, p: f64, table: &AnnulusTable, idx: FrameIndex) -> Result<f64> {
    let m = measure_unchecked(table, idx);
    if p.is_infinite() {
        return Ok(m.powf(-0.5));
    }
    let (lo, hi) = table.bounds_unchecked(idx);
    let integral = w.shell_integral(lo, hi)?;
    if !(integral.is_finite() && integral > 0.0) {
        return Err(AflError::DivergentIntegral {
            mu: idx.mu,
            k: idx.k,
            detail: format!("annulus weight integral is {integral}"),
        });
    }
    if w.is_unweighted() {
        return Ok(m.powf(1.0 / p - 0.5));
    }
    Ok(m.powf(-0.5) * integral.powf(1.0 / p))
}

/// Masses `w_{mu k}` for one `(weight, p)` over a whole annulus table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedMassTable {
    pub weight: WeightSpec,
    pub p: f64,
    pub mu_max: u32,
    pub k_max: u32,
    values: Vec<f64>,
}

impl WeightedMassTable {
    /// Parallel fill; the content does not depend on the fill order.
    pub fn build(w: &WeightSpec, p: f64, table: &AnnulusTable) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(AflError::invalid(format!("exponent p = {p} must be >= 1")));
        }
        check_dims(w, table)?;
        let idx: Vec<FrameIndex> = table.indices().collect();
        let values = idx
            .par_iter()
            .map(|&i| mass_unchecked(w, p, table, i))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            weight: w.clone(),
            p,
            mu_max: table.mu_max(),
            k_max: table.k_max(),
            values,
        })
    }

    pub fn get(&self, idx: FrameIndex) -> f64 {
        assert!(idx.mu <= self.mu_max && idx.k >= 1 && idx.k <= self.k_max);
        self.values[idx.mu as usize * self.k_max as usize + idx.k as usize - 1]
    }

    /// Masses at scale `mu`, `k = 1..=k_max`.
    pub fn row(&self, mu: u32) -> &[f64] {
        let k = self.k_max as usize;
        &self.values[mu as usize * k..(mu as usize + 1) * k]
    }
}

/// One-dimensional weight `delta_n w_0(t) = w_0(t^{1/n})` on `(0, inf)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LineWeight {
    Power { exponent: f64 },
    TwoRegime { alpha: f64, beta: f64 },
    /// Samples at `t_i = r_i^n`; interpolation in `log t` is the original one.
    Tabulated { profile: RadialProfile },
}

impl LineWeight {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            LineWeight::Power { exponent } => t.powf(*exponent),
            LineWeight::TwoRegime { alpha, beta } => {
                if t <= 1.0 {
                    t.powf(*alpha)
                } else {
                    t.powf(*beta)
                }
            }
            LineWeight::Tabulated { profile } => tabulated_value(profile, t),
        }
    }

    /// Range on which the weight is known (whole half-line for closed forms).
    pub fn domain(&self) -> (f64, f64) {
        match self {
            LineWeight::Tabulated { profile } => match &profile.form {
                ProfileForm::Sampled { r, .. } => (r[0], r[r.len() - 1]),
                _ => (0.0, f64::INFINITY),
            },
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `int_a^b w(t)^e dt`.
    fn power_integral(&self, e: f64, a: f64, b: f64) -> Result<f64> {
        // one-dimensional: r^(x + 1 - 1)
        match self {
            LineWeight::Power { exponent } => Ok(power_integral(1, e * exponent, a, b)),
            LineWeight::TwoRegime { alpha, beta } => {
                Ok(piecewise_power_integral(1, e * alpha, e * beta, a, b))
            }
            LineWeight::Tabulated { profile } => {
                let mut points = vec![a];
                points.extend(profile.space_breaks().into_iter().filter(|x| *x > a && *x < b));
                points.push(b);
                let mut total = 0.0;
                for w in points.windows(2) {
                    total += adaptive_gk15(|t| self.value(t).powf(e), w[0], w[1], QUAD_TOL, 0.0)?;
                }
                Ok(total)
            }
        }
    }
}

pub fn delta_n_transform(w: &WeightSpec) -> LineWeight {
    let n = w.n as f64;
    match &w.kind {
        WeightKind::Power { gamma } => LineWeight::Power { exponent: gamma / n },
        WeightKind::TwoRegime { alpha, beta } => LineWeight::TwoRegime {
            alpha: alpha / n,
            beta: beta / n,
        },
        WeightKind::Tabulated { profile } => {
            let mut p = profile.clone();
            if let ProfileForm::Sampled { r, .. } = &mut p.form {
                for x in r.iter_mut() {
                    *x = x.powf(n);
                }
            }
            LineWeight::Tabulated { profile: p }
        }
    }
}

/// Intervals `[2^a, 2^b]` with endpoints on a grid of `steps_per_octave`
/// points per octave in `[2^j_min, 2^j_max]`, spans up to `max_span_octaves`,
/// plus origin-anchored `[0, 2^b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApPlan {
    pub j_min: i32,
    pub j_max: i32,
    pub steps_per_octave: u32,
    pub max_span_octaves: u32,
}

impl Default for ApPlan {
    fn default() -> Self {
        Self {
            j_min: -20,
            j_max: 20,
            steps_per_octave: 1,
            max_span_octaves: 1,
        }
    }
}

impl ApPlan {
    /// A plan whose interval set contains this one's.
    pub fn refined(&self) -> Self {
        Self {
            j_min: self.j_min - 2,
            j_max: self.j_max + 2,
            steps_per_octave: self.steps_per_octave * 2,
            max_span_octaves: self.max_span_octaves * 2,
        }
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let s = self.steps_per_octave.max(1) as i64;
        let lo = self.j_min as i64 * s;
        let hi = self.j_max as i64 * s;
        let span = self.max_span_octaves.max(1) as i64 * s;
        let pt = |i: i64| (i as f64 / s as f64).exp2();
        let mut out = Vec::new();
        for b in lo..=hi {
            out.push((0.0, pt(b)));
            for a in (b - span).max(lo)..b {
                out.push((pt(a), pt(b)));
            }
        }
        out
    }
}

/// `sup_I (|I|^-1 int_I v)(|I|^-1 int_I v^{1-p'})^{p-1}` for `v = delta_n w`
/// over the plan; `+inf` when an interval integral diverges.
pub fn ap_constant_estimate(w: &WeightSpec, p: f64, plan: &ApPlan) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(AflError::invalid("A_p estimate needs 1 < p < inf"));
    }
    let v = delta_n_transform(w);
    let dual = -1.0 / (p - 1.0); // 1 - p'
    let (dlo, dhi) = v.domain();
    let mut sup: f64 = 0.0;
    for (a, b) in plan.intervals() {
        // tabulated weights are only probed where they are known
        let (a, b) = (a.max(dlo), b.min(dhi));
        if b <= a {
            continue;
        }
        let len = b - a;
        let i1 = v.power_integral(1.0, a, b)?;
        let i2 = v.power_integral(dual, a, b)?;
        if !i1.is_finite() || !i2.is_finite() {
            return Ok(f64::INFINITY);
        }
        let val = (i1 / len) * (i2 / len).powf(p - 1.0);
        sup = sup.max(val);
    }
    Ok(sup)
}

/// Whether the estimate classifies `w` as an `A_p` weight.
pub fn in_ap_class(w: &WeightSpec, p: f64, plan: &ApPlan) -> Result<bool> {
    Ok(ap_constant_estimate(w, p, plan)?.is_finite())
}

/// `max` over the annuli of
/// `int w1^-eps w2^(1+eps) / ((int w1)^-eps (int w2)^(1+eps))`.
pub fn verify_product_lemma(
    w1: &WeightSpec,
    w2: &WeightSpec,
    eps: f64,
    table: &AnnulusTable,
    indices: &[FrameIndex],
) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(AflError::invalid("eps must be finite and nonnegative"));
    }
    if w1.n != w2.n {
        return Err(AflError::invalid("weights must share the dimension"));
    }
    check_dims(w1, table)?;
    let mut worst: f64 = 0.0;
    for &idx in indices {
        table.check(idx)?;
        let (a, b) = table.bounds_unchecked(idx);
        let i1 = w1.shell_integral(a, b)?;
        let i2 = w2.shell_integral(a, b)?;
        let lhs = match (w1.exponents(), w2.exponents()) {
            (Some((a1, b1)), Some((a2, b2))) => {
                // written so that equal weights give bit-identical exponents
                let inner = a2 + eps * (a2 - a1);
                let outer = b2 + eps * (b2 - b1);
                sphere_area(w1.n) * piecewise_power_integral(w1.n, inner, outer, a, b)
            }
            _ => {
                sphere_area(w1.n)
                    * w1.numeric_integral(a, b, |r| {
                        let v2 = w2.value(r);
                        v2 * (v2 / w1.value(r)).powf(eps)
                    })?
            }
        };
        if !(lhs.is_finite() && i1.is_finite() && i2.is_finite() && i1 > 0.0 && i2 > 0.0) {
            return Err(AflError::DivergentIntegral {
                mu: idx.mu,
                k: idx.k,
                detail: format!("product-lemma integrals: lhs {lhs}, w1 {i1}, w2 {i2}"),
            });
        }
        let rhs = i2 * (i2 / i1).powf(eps);
        worst = worst.max(lhs / rhs);
    }
    Ok(worst)
}
