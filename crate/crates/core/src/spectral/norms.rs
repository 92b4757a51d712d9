//! Weighted `L^p` norms and the Besov / Triebel–Lizorkin norms built from
//! the Littlewood–Paley pieces `S_mu f`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filters::{lp_band, lp_band_support, BankVariant, FilterBank};
use super::hankel::{forward_constant, order, sphere_area};
use super::profile::{BandFilter, RadialProfile};
use crate::error::{AflError, Result};
use crate::extended;
use crate::quadrature::{uniform_breaks, CompositeRule, GaussLegendre};
use crate::special::j_scaled;
use crate::weights::WeightSpec;

/// How far (in units of `2^-(mu-1)`) a band piece is followed past the
/// profile's own extent. The cutoff kernel has decayed to ~3e-9 of its peak
/// at 80 units.
const KERNEL_REACH: f64 = 128.0;

/// Bands whose filtered spectrum stays below this fraction of the spectrum's
/// peak are stored as zero.
const BAND_FLOOR: f64 = 1e-25;

const SPACE_NODES: usize = 8;
const FREQ_NODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    #[serde(alias = "b")]
    Besov,
    #[serde(alias = "tl", alias = "f")]
    TriebelLizorkin,
}

/// `(kind, s, p, q, n, w)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceParams {
    pub kind: SpaceKind,
    pub s: f64,
    #[serde(with = "extended")]
    pub p: f64,
    #[serde(with = "extended")]
    pub q: f64,
    pub n: u32,
    pub weight: WeightSpec,
}

impl SpaceParams {
    pub fn new(kind: SpaceKind, s: f64, p: f64, q: f64, n: u32, weight: WeightSpec) -> Result<Self> {
        let mut sp = Self {
            kind,
            s,
            p,
            q,
            n,
            weight,
        };
        sp.weight = sp.weight.with_dimension(n)?;
        sp.validate()?;
        Ok(sp)
    }

    pub fn besov(s: f64, p: f64, q: f64, weight: WeightSpec) -> Result<Self> {
        let n = weight.n;
        Self::new(SpaceKind::Besov, s, p, q, n, weight)
    }

    pub fn triebel_lizorkin(s: f64, p: f64, q: f64, weight: WeightSpec) -> Result<Self> {
        let n = weight.n;
        Self::new(SpaceKind::TriebelLizorkin, s, p, q, n, weight)
    }

    /// Fills the weight dimension and checks the invariants.
    pub fn normalized(mut self) -> Result<Self> {
        self.weight = self.weight.with_dimension(self.n)?;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(AflError::invalid("smoothness s must be finite"));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(AflError::invalid(format!(
                "exponents must lie in [1, inf]: p = {}, q = {}",
                self.p, self.q
            )));
        }
        if self.kind == SpaceKind::TriebelLizorkin && self.p.is_infinite() {
            return Err(AflError::invalid("Triebel-Lizorkin spaces need p < inf"));
        }
        if self.weight.n != self.n {
            return Err(AflError::invalid("weight dimension differs from n"));
        }
        self.weight.validate()
    }
}

fn gl(m: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    let r = RULES.get_or_init(|| (GaussLegendre::new(SPACE_NODES), GaussLegendre::new(FREQ_NODES)));
    if m == SPACE_NODES {
        &r.0
    } else {
        &r.1
    }
}

/// Geometric refinement of `[0, b]` toward the origin.
fn graded_breaks(b: f64, levels: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=levels).rev().map(|i| b * (-(i as f64)).exp2()).collect();
    v.insert(0, 0.0);
    v.push(b);
    v
}

fn space_rule(f: &RadialProfile, w: &WeightSpec) -> CompositeRule {
    let extent = f.space_extent();
    let width = f.length_scale() / 4.0;
    let mut breaks: Vec<f64> = f
        .space_breaks()
        .into_iter()
        .chain(w.breaks())
        .filter(|b| *b > 0.0 && *b < extent)
        .collect();
    breaks.push(extent);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let first = breaks[0].min(width);
    let mut all = graded_breaks(first, 40);
    let mut prev = first;
    for &b in &breaks {
        if b > prev {
            all.extend(uniform_breaks(prev, b, width).into_iter().skip(1));
            prev = b;
        }
    }
    CompositeRule::from_breaks(&all, gl(SPACE_NODES))
}

/// `||f||_{L^p(R^n, w)}`; `p = inf` gives `sup |f|` (the weight drops out).
/// A divergent integral is reported as `+inf`.
pub fn weighted_lp_norm(f: &RadialProfile, w: &WeightSpec, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(AflError::invalid(format!("exponent p = {p} must be >= 1")));
    }
    let w = w.with_dimension(f.n)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let rule = space_rule(f, &w);
    if p.is_infinite() {
        let mut sup: f64 = 0.0;
        for &r in rule.nodes.iter().chain(f.space_breaks().iter()) {
            sup = sup.max(f.value(r).abs());
        }
        return Ok(sup);
    }
    let n = f.n as i32;
    let vals: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&r, &wt)| wt * f.value(r).abs().powf(p) * w.value(r) * r.powi(n - 1))
        .collect();
    let total = sphere_area(f.n) * vals.iter().sum::<f64>();
    Ok(if total.is_finite() { total.powf(1.0 / p) } else { f64::INFINITY })
}

/// `(2 pi)^-n omega int_lo^hi |g(rho)|^2 rho^(n-1) drho`.
pub(crate) fn frequency_energy(n: u32, g: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, width: f64) -> f64 {
    let rule = CompositeRule::uniform(lo, hi, width, gl(FREQ_NODES));
    let s: f64 = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * g(x).powi(2) * x.powi(n as i32 - 1))
        .sum();
    sphere_area(n) * s / (2.0 * PI).powi(n as i32)
}

pub fn l2_norm(f: &RadialProfile) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    if let super::profile::ProfileForm::Synthesized { coefficients } = &f.form {
        if let Ok(frame) = crate::frame::Frame::shared_for(coefficients) {
            return frame.synthesized_l2(coefficients);
        }
    }
    match f.freq_extent() {
        Some(hi) => {
            let (lo, hi) = f.freq_support().unwrap_or((0.0, hi));
            let width = (PI / f.space_extent().max(1e-300)).min((hi - lo) / 64.0);
            frequency_energy(f.n, |x| f.spectrum(x), lo, hi, width).sqrt()
        }
        None => weighted_lp_norm(f, &WeightSpec::unweighted(f.n), 2.0).unwrap_or(f64::NAN),
    }
}

/// `S_mu f = F^-1[phi_mu f^]`.
pub fn lp_piece(f: &RadialProfile, bank: &FilterBank, mu: u32) -> Result<RadialProfile> {
    if bank.variant != BankVariant::Lp {
        return Err(AflError::invalid("Littlewood-Paley pieces need the LP bank"));
    }
    if mu > bank.mu_max {
        return Err(AflError::invalid(format!("band {mu} beyond mu_max {}", bank.mu_max)));
    }
    Ok(f.filtered(BandFilter::Lp { mu }))
}

/// Band pieces `S_0 f, ..., S_{mu_max+1} f` on one radial quadrature grid.
/// The last band only feeds the tail estimate.
#[derive(Debug)]
pub struct LpDecomposition {
    pub n: u32,
    pub mu_max: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[mu][i] = S_mu f(nodes[i])`.
    pub values: Vec<Vec<f64>>,
    /// Largest `|S_mu f|` on the outermost cell of each band, relative to the
    /// band's peak: the part left past the radial truncation.
    pub truncation_leak: Vec<f64>,
}

struct BandGrid {
    h: f64,
    reach: f64,
    /// `SPACE_NODES` values per cell, cells `[c h, (c+1) h]`.
    cells: Vec<f64>,
    peak: f64,
}

fn band_grid(f: &RadialProfile, mu: u32, extent: f64, spec_peak: f64) -> BandGrid {
    let n = f.n;
    let nu = order(n);
    let h = 0.5 * (-(mu as f64)).exp2();
    let reach_raw = extent + KERNEL_REACH * (-(mu.saturating_sub(1) as f64)).exp2();
    let cells_count = (reach_raw / h).ceil() as usize;
    let reach = cells_count as f64 * h;
    let (lo, hi) = lp_band_support(mu);
    let width = (2.0 * PI / reach).min((hi - lo) / 16.0);
    let frule = CompositeRule::uniform(lo, hi, width, gl(FREQ_NODES));
    let c = forward_constant(n);
    let mut peak_band: f64 = 0.0;
    let g: Vec<(f64, f64)> = frule
        .nodes
        .iter()
        .zip(&frule.weights)
        .filter_map(|(&rho, &w)| {
            let m = lp_band(mu, rho);
            if m == 0.0 {
                return None;
            }
            let s = m * f.spectrum(rho);
            peak_band = peak_band.max(s.abs());
            Some((rho, w * s * rho.powi(n as i32 - 1) / c))
        })
        .collect();
    if !(peak_band > BAND_FLOOR * spec_peak) {
        return BandGrid {
            h,
            reach,
            cells: Vec::new(),
            peak: 0.0,
        };
    }
    let srule = GaussLegendre::new(SPACE_NODES);
    let local: Vec<(f64, f64)> = srule.mapped(0.0, 1.0).collect();
    let cells: Vec<f64> = (0..cells_count * SPACE_NODES)
        .into_par_iter()
        .map(|i| {
            let cell = i / SPACE_NODES;
            let r = h * (cell as f64 + local[i % SPACE_NODES].0);
            g.iter().map(|&(rho, gw)| gw * j_scaled(nu, r * rho)).sum()
        })
        .collect();
    let peak = cells.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    BandGrid { h, reach, cells, peak }
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            1.0 / (0..x.len())
                .filter(|&j| j != i)
                .map(|j| x[i] - x[j])
                .product::<f64>()
        })
        .collect()
}

fn interpolate(x: &[f64], bw: &[f64], y: &[f64], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let d = t - x[i];
        if d == 0.0 {
            return y[i];
        }
        let c = bw[i] / d;
        num += c * y[i];
        den += c;
    }
    num / den
}

impl LpDecomposition {
    pub fn build(f: &RadialProfile, mu_max: u32) -> Result<Self> {
        let n = f.n;
        let top = mu_max + 1;
        if f.is_zero() {
            return Ok(Self {
                n,
                mu_max,
                nodes: Vec::new(),
                weights: Vec::new(),
                values: vec![Vec::new(); top as usize + 1],
                truncation_leak: vec![0.0; top as usize + 1],
            });
        }
        let extent = f.space_extent();
        if !extent.is_finite() || extent <= 0.0 {
            return Err(AflError::Numerical(format!("profile extent {extent} unusable")));
        }
        // peak of the spectrum, for the band floor
        let probe_hi = f.freq_extent().unwrap_or(1.5 * (top as f64).exp2());
        let spec_peak = (0..=400)
            .map(|i| f.spectrum(probe_hi * i as f64 / 400.0).abs())
            .fold(0.0f64, f64::max);
        let bands: Vec<BandGrid> = (0..=top).map(|mu| band_grid(f, mu, extent, spec_peak)).collect();

        // union of the nested dyadic cell boundaries, plus r = 1 and grading
        let live: Vec<&BandGrid> = bands.iter().filter(|b| b.peak > 0.0).collect();
        let Some(finest) = live.last() else {
            return Ok(Self {
                n,
                mu_max,
                nodes: Vec::new(),
                weights: Vec::new(),
                values: vec![Vec::new(); top as usize + 1],
                truncation_leak: vec![0.0; top as usize + 1],
            });
        };
        let mut breaks: Vec<f64> = Vec::new();
        for b in &live {
            let cells = (b.reach / b.h).round() as usize;
            breaks.extend((0..=cells).map(|c| c as f64 * b.h));
        }
        breaks.push(1.0);
        breaks.extend(graded_breaks(finest.h, 30));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let srule = GaussLegendre::new(SPACE_NODES);
        let ref_nodes: Vec<f64> = srule.mapped(0.0, 1.0).map(|p| p.0).collect();
        let bw = barycentric_weights(&ref_nodes);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in breaks.windows(2) {
            for (x, wt) in srule.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        let values: Vec<Vec<f64>> = bands
            .iter()
            .map(|b| {
                if b.peak == 0.0 {
                    return vec![0.0; nodes.len()];
                }
                nodes
                    .iter()
                    .map(|&r| {
                        if r >= b.reach {
                            return 0.0;
                        }
                        let cell = ((r / b.h).floor() as usize).min(b.cells.len() / SPACE_NODES - 1);
                        let y = &b.cells[cell * SPACE_NODES..(cell + 1) * SPACE_NODES];
                        interpolate(&ref_nodes, &bw, y, r / b.h - cell as f64)
                    })
                    .collect()
            })
            .collect();
        let truncation_leak = bands
            .iter()
            .map(|b| {
                if b.peak == 0.0 {
                    0.0
                } else {
                    let last = &b.cells[b.cells.len() - SPACE_NODES..];
                    last.iter().fold(0.0f64, |m, v| m.max(v.abs())) / b.peak
                }
            })
            .collect();
        Ok(Self {
            n,
            mu_max,
            nodes,
            weights,
            values,
            truncation_leak,
        })
    }

    /// Cached per `(profile, mu_max)`.
    pub fn shared(f: &RadialProfile, mu_max: u32) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(String, u32), Arc<LpDecomposition>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = (serde_json::to_string(f)?, mu_max);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(d) = cache.lock().expect("decomposition cache poisoned").get(&key) {
            return Ok(Arc::clone(d));
        }
        let d = Arc::new(Self::build(f, mu_max)?);
        let mut guard = cache.lock().expect("decomposition cache poisoned");
        if guard.len() >= 64 {
            guard.clear();
        }
        guard.insert(key, Arc::clone(&d));
        Ok(d)
    }

    /// `omega w(r_i) r_i^(n-1) W_i`.
    fn measure(&self, w: &WeightSpec) -> Vec<f64> {
        let omega = sphere_area(self.n);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &wt)| omega * wt * w.value(r) * r.powi(self.n as i32 - 1))
            .collect()
    }
}

/// A truncated norm with its diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    /// Size of the first omitted band term (`mu = mu_max + 1`).
    pub tail_estimate: f64,
    /// `q = inf` (or `p = inf`) evaluated as a supremum over the truncated
    /// index set.
    pub truncated_sup: bool,
    /// `2^{mu s} ||S_mu f||_{L^p(w)}` for `mu <= mu_max` (Besov only).
    pub band_terms: Vec<f64>,
    pub mu_max: u32,
}

fn lq(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn check_bank(f: &RadialProfile, params: &SpaceParams, bank: &FilterBank, kind: SpaceKind) -> Result<()> {
    if params.kind != kind {
        return Err(AflError::invalid("space kind does not match the requested norm"));
    }
    if bank.variant != BankVariant::Lp {
        return Err(AflError::invalid("space norms use the LP bank"));
    }
    if params.n != f.n || bank.n != f.n {
        return Err(AflError::invalid("profile, bank and space dimensions differ"));
    }
    params.validate()
}

/// `(sum_mu 2^{q mu s} ||S_mu f||^q_{L^p(w)})^{1/q}`, truncated at the bank's
/// `mu_max`.
pub fn besov_norm(f: &RadialProfile, params: &SpaceParams, bank: &FilterBank) -> Result<NormResult> {
    check_bank(f, params, bank, SpaceKind::Besov)?;
    let d = LpDecomposition::shared(f, bank.mu_max)?;
    Ok(besov_from(&d, params))
}

pub(crate) fn besov_from(d: &LpDecomposition, params: &SpaceParams) -> NormResult {
    let dm = d.measure(&params.weight);
    let p = params.p;
    let band = |mu: usize| -> f64 {
        let v = &d.values[mu];
        let norm = if p.is_infinite() {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            v.iter()
                .zip(&dm)
                .map(|(x, m)| m * x.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        };
        (mu as f64 * params.s).exp2() * norm
    };
    let band_terms: Vec<f64> = (0..=d.mu_max as usize).map(band).collect();
    NormResult {
        value: lq(band_terms.iter().copied(), params.q),
        tail_estimate: band(d.mu_max as usize + 1),
        truncated_sup: params.q.is_infinite() || p.is_infinite(),
        band_terms,
        mu_max: d.mu_max,
    }
}

/// `|| (sum_mu 2^{q mu s} |S_mu f|^q)^{1/q} ||_{L^p(w)}`, truncated at the
/// bank's `mu_max`.
pub fn tl_norm(f: &RadialProfile, params: &SpaceParams, bank: &FilterBank) -> Result<NormResult> {
    check_bank(f, params, bank, SpaceKind::TriebelLizorkin)?;
    let d = LpDecomposition::shared(f, bank.mu_max)?;
    Ok(tl_from(&d, params))
}

pub(crate) fn tl_from(d: &LpDecomposition, params: &SpaceParams) -> NormResult {
    let dm = d.measure(&params.weight);
    let (p, q, s) = (params.p, params.q, params.s);
    let scales: Vec<f64> = (0..=d.mu_max + 1).map(|m| (m as f64 * s).exp2()).collect();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, m) in dm.iter().enumerate() {
        let g = lq(
            (0..=d.mu_max as usize).map(|mu| scales[mu] * d.values[mu][i].abs()),
            q,
        );
        total += m * g.powf(p);
        let last = d.mu_max as usize + 1;
        tail += m * (scales[last] * d.values[last][i].abs()).powf(p);
    }
    NormResult {
        value: total.powf(1.0 / p),
        tail_estimate: tail.powf(1.0 / p),
        truncated_sup: q.is_infinite(),
        band_terms: Vec::new(),
        mu_max: d.mu_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::filters::{build_filter_bank, default_freq_grid};

    fn bank(mu_max: u32) -> FilterBank {
        build_filter_bank(BankVariant::Lp, 3, mu_max, &default_freq_grid(mu_max, 64)).unwrap()
    }

    #[test]
    fn gaussian_l2_norm() {
        let g = RadialProfile::gaussian(3, 1.0).unwrap();
        let w = WeightSpec::unweighted(3);
        let v = weighted_lp_norm(&g, &w, 2.0).unwrap();
        assert!((v - PI.powf(0.75)).abs() < 1e-12);
        assert!((g.l2_norm() - PI.powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_ignores_weight() {
        let g = RadialProfile::gaussian(3, 1.0).unwrap();
        let a = weighted_lp_norm(&g, &WeightSpec::power(3, 2.0).unwrap(), f64::INFINITY).unwrap();
        let b = weighted_lp_norm(&g, &WeightSpec::unweighted(3), f64::INFINITY).unwrap();
        assert_eq!(a, b);
        assert!((a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_indicator_has_unit_norm() {
        let t = crate::annuli::AnnulusTable::new(3, 4, 8).unwrap();
        let p = crate::annuli::indicator_profile(&t, crate::annuli::FrameIndex { mu: 2, k: 5 }).unwrap();
        let v = weighted_lp_norm(&p, &WeightSpec::unweighted(3), 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_profile_norms_vanish() {
        let b = bank(4);
        let z = RadialProfile::zero(3);
        let w = WeightSpec::unweighted(3);
        let bp = SpaceParams::besov(1.0, 2.0, 2.0, w.clone()).unwrap();
        let tp = SpaceParams::triebel_lizorkin(1.0, 2.0, 2.0, w).unwrap();
        assert_eq!(besov_norm(&z, &bp, &b).unwrap().value, 0.0);
        assert_eq!(tl_norm(&z, &tp, &b).unwrap().value, 0.0);
    }

    #[test]
    fn besov_l2_sits_between_half_and_full_energy() {
        let b = bank(8);
        let g = RadialProfile::gaussian(3, 1.0).unwrap();
        let w = WeightSpec::unweighted(3);
        let bp = SpaceParams::besov(0.0, 2.0, 2.0, w.clone()).unwrap();
        let norm = besov_norm(&g, &bp, &b).unwrap().value;
        // oracle: int (sum phi_mu^2) |f^|^2 on the frequency side
        let freq = frequency_energy(
            3,
            |x| {
                let s: f64 = (0..=8).map(|m| lp_band(m, x).powi(2)).sum();
                s.sqrt() * g.spectrum(x)
            },
            0.0,
            12.0,
            0.05,
        );
        let l2 = PI.powf(0.75);
        assert!((norm * norm - freq).abs() < 1e-8 * freq, "{} vs {freq}", norm * norm);
        assert!(norm * norm >= 0.5 * l2 * l2 && norm <= l2);
        // q monotonicity
        let b4 = SpaceParams::besov(0.0, 2.0, 4.0, w).unwrap();
        assert!(besov_norm(&g, &b4, &b).unwrap().value <= norm);
    }

    #[test]
    fn p_equal_q_collapses_tl_to_besov() {
        let b = bank(8);
        let g = RadialProfile::gaussian(3, 2.0).unwrap();
        let w = WeightSpec::power(3, 1.0).unwrap();
        for &p in &[2.0, 3.0] {
            let bp = SpaceParams::besov(0.5, p, p, w.clone()).unwrap();
            let tp = SpaceParams::triebel_lizorkin(0.5, p, p, w.clone()).unwrap();
            let x = besov_norm(&g, &bp, &b).unwrap().value;
            let y = tl_norm(&g, &tp, &b).unwrap().value;
            assert!(((x - y) / x).abs() < 1e-12);
        }
    }

    #[test]
    fn tl_rejects_infinite_p() {
        let w = WeightSpec::unweighted(3);
        assert!(SpaceParams::triebel_lizorkin(0.0, f64::INFINITY, 2.0, w).is_err());
    }
}
