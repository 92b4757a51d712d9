//! Radial frame of band-limited sphere averages: atoms
//! `psi_{mu k} = c_{mu k} theta_mu * d sigma_{2^-mu j_{nu,k}}`, the analysis
//! operator `S`, the synthesis operator `T` and `T S`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annuli::{AnnulusTable, FrameIndex};
use crate::error::{AflError, Result};
use crate::quadrature::{CompositeRule, GaussLegendre};
use crate::special::{j_scaled, j_unchecked};
use crate::spectral::{
    build_filter_bank, default_freq_grid, forward_constant, frame_band, frame_band_support, order,
    sphere_area, BankVariant, FilterBank, Interpolation, ProfileForm, RadialProfile, FRAME_ALIGNMENT,
};

pub const DEFAULT_MU_MAX: u32 = 10;
pub const DEFAULT_K_MAX: u32 = 256;

/// Coefficients below this fraction of the largest one do not widen the
/// reported space extent of a synthesized profile.
const EXTENT_FLOOR: f64 = 1e-12;

const NODES: usize = 12;

/// Truncated coefficient array `lambda_{mu k}`, `mu <= mu_max`, `1 <= k <= k_max`,
/// stored `mu`-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientGrid {
    pub n: u32,
    pub mu_max: u32,
    pub k_max: u32,
    values: Vec<f64>,
}

impl CoefficientGrid {
    pub fn zeros(n: u32, mu_max: u32, k_max: u32) -> Self {
        Self {
            n,
            mu_max,
            k_max,
            values: vec![0.0; (mu_max as usize + 1) * k_max as usize],
        }
    }

    pub fn from_values(n: u32, mu_max: u32, k_max: u32, values: Vec<f64>) -> Result<Self> {
        let g = Self {
            n,
            mu_max,
            k_max,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k_max == 0 {
            return Err(AflError::invalid("coefficient grid needs n >= 2 and k_max >= 1"));
        }
        if self.values.len() != (self.mu_max as usize + 1) * self.k_max as usize {
            return Err(AflError::invalid(format!(
                "coefficient grid holds {} values, expected {}",
                self.values.len(),
                (self.mu_max as usize + 1) * self.k_max as usize
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(AflError::invalid("coefficient grid has non-finite entries"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    fn offset(&self, idx: FrameIndex) -> Result<usize> {
        if idx.k == 0 || idx.k > self.k_max || idx.mu > self.mu_max {
            return Err(AflError::IndexOutOfRange {
                mu: idx.mu,
                k: idx.k,
                mu_max: self.mu_max,
                k_max: self.k_max,
            });
        }
        Ok(idx.mu as usize * self.k_max as usize + idx.k as usize - 1)
    }

    pub fn get(&self, idx: FrameIndex) -> Result<f64> {
        Ok(self.values[self.offset(idx)?])
    }

    pub fn set(&mut self, idx: FrameIndex, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(AflError::invalid("coefficients must be finite"));
        }
        let i = self.offset(idx)?;
        self.values[i] = v;
        Ok(())
    }

    /// Coefficients at scale `mu`, `k = 1..=k_max`.
    pub fn row(&self, mu: u32) -> &[f64] {
        let k = self.k_max as usize;
        &self.values[mu as usize * k..(mu as usize + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (FrameIndex, f64)> + '_ {
        let k_max = self.k_max as usize;
        self.values.iter().enumerate().map(move |(i, &v)| {
            (
                FrameIndex {
                    mu: (i / k_max) as u32,
                    k: (i % k_max) as u32 + 1,
                },
                v,
            )
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with columns `mu,k,lambda`; values use the shortest representation
    /// that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu", "k", "lambda"])?;
        for (idx, v) in self.iter() {
            w.write_record([idx.mu.to_string(), idx.k.to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `mu,k,lambda` rows; the truncation is the largest index seen and
    /// missing entries are zero.
    pub fn read_csv<R: Read>(n: u32, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
            let mu: u32 = field(0)
                .parse()
                .map_err(|_| AflError::invalid(format!("bad mu field {:?}", field(0))))?;
            let k: u32 = field(1)
                .parse()
                .map_err(|_| AflError::invalid(format!("bad k field {:?}", field(1))))?;
            let v: f64 = field(2)
                .parse()
                .map_err(|_| AflError::invalid(format!("bad lambda field {:?}", field(2))))?;
            rows.push((FrameIndex::new(mu, k)?, v));
        }
        if rows.is_empty() {
            return Err(AflError::invalid("coefficient CSV has no rows"));
        }
        let mu_max = rows.iter().map(|r| r.0.mu).max().unwrap_or(0);
        let k_max = rows.iter().map(|r| r.0.k).max().unwrap_or(1);
        let mut g = Self::zeros(n, mu_max, k_max);
        for (idx, v) in rows {
            g.set(idx, v)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }
}

/// Truncation parameters identifying a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSpec {
    pub n: u32,
    pub mu_max: u32,
    pub k_max: u32,
}

impl FrameSpec {
    pub fn new(n: u32, mu_max: u32, k_max: u32) -> Self {
        Self { n, mu_max, k_max }
    }
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self::new(3, DEFAULT_MU_MAX, DEFAULT_K_MAX)
    }
}

/// Per-band frequency quadrature for the analysis pairing.
#[derive(Debug)]
struct BandRule {
    nodes: Vec<f64>,
    /// `W_i (2 pi)^-n omega rho_i^(n-1) theta_mu(rho_i)`.
    pairing: Vec<f64>,
}

#[derive(Debug)]
pub struct Frame {
    spec: FrameSpec,
    table: AnnulusTable,
    bank: FilterBank,
    /// `c_{mu k}`, `mu`-major.
    constants: Vec<f64>,
    rules: Vec<BandRule>,
}

fn gl() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NODES))
}

impl Frame {
    pub fn new(spec: FrameSpec) -> Result<Self> {
        let FrameSpec { n, mu_max, k_max } = spec;
        let table = AnnulusTable::new(n, mu_max, k_max)?;
        let bank = build_filter_bank(BankVariant::Frame, n, mu_max.max(1), &default_freq_grid(mu_max.max(1), 256))?;
        let nu = order(n);
        let omega = sphere_area(n);
        let zeros = table.zeros();
        let base: Vec<f64> = (1..=k_max as usize)
            .map(|k| {
                let j = zeros.zero(k);
                let d = j_unchecked(nu + 1.0, j);
                2.0 / (j.powi(n as i32) * d * d * omega)
            })
            .collect();
        let mut constants = Vec::with_capacity(base.len() * (mu_max as usize + 1));
        for mu in 0..=mu_max {
            let scale = (mu as f64 * (n as f64 - 2.0)).exp2();
            constants.extend(base.iter().map(|b| (scale * b).sqrt()));
        }
        if constants.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(AflError::Numerical("frame constant not finite and positive".into()));
        }
        let j_top = zeros.zero(k_max as usize);
        let norm = omega / (2.0 * std::f64::consts::PI).powi(n as i32);
        let rules = (0..=mu_max)
            .map(|mu| {
                let (lo, hi) = frame_band_support(mu);
                // half a wave of the fastest sphere transform in the band
                let width = (std::f64::consts::PI * (mu as f64).exp2() / j_top).min((hi - lo) / 16.0);
                let rule = CompositeRule::uniform(lo, hi, width, gl());
                let (nodes, pairing): (Vec<f64>, Vec<f64>) = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .filter_map(|(&rho, &w)| {
                        let th = frame_band(mu, rho);
                        (th != 0.0).then(|| (rho, w * norm * rho.powi(n as i32 - 1) * th))
                    })
                    .unzip();
                BandRule { nodes, pairing }
            })
            .collect();
        Ok(Self {
            spec,
            table,
            bank,
            constants,
            rules,
        })
    }

    /// Process-wide frame for `spec`, built once.
    pub fn shared(spec: FrameSpec) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<FrameSpec, Arc<Frame>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(f) = cache.lock().expect("frame cache poisoned").get(&spec) {
            return Ok(Arc::clone(f));
        }
        let frame = Arc::new(Self::new(spec)?);
        cache
            .lock()
            .expect("frame cache poisoned")
            .entry(spec)
            .or_insert_with(|| Arc::clone(&frame));
        Ok(frame)
    }

    /// The frame matching a coefficient grid's truncation.
    pub fn shared_for(grid: &CoefficientGrid) -> Result<Arc<Self>> {
        Self::shared(FrameSpec::new(grid.n, grid.mu_max, grid.k_max))
    }

    pub fn spec(&self) -> FrameSpec {
        self.spec
    }

    pub fn n(&self) -> u32 {
        self.spec.n
    }

    pub fn mu_max(&self) -> u32 {
        self.spec.mu_max
    }

    pub fn k_max(&self) -> u32 {
        self.spec.k_max
    }

    pub fn table(&self) -> &AnnulusTable {
        &self.table
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Dilation placing the band supports inside `(1/4, 1) 2^mu`.
    pub fn alignment(&self) -> f64 {
        FRAME_ALIGNMENT
    }

    pub fn constant(&self, idx: FrameIndex) -> Result<f64> {
        self.table.check(idx)?;
        Ok(self.constant_unchecked(idx.mu, idx.k))
    }

    fn constant_unchecked(&self, mu: u32, k: u32) -> f64 {
        self.constants[mu as usize * self.spec.k_max as usize + k as usize - 1]
    }

    /// Sphere radius `2^-mu j_{nu,k}` of an atom.
    fn radius(&self, mu: u32, k: u32) -> f64 {
        (-(mu as f64)).exp2() * self.table.zeros().zero(k as usize)
    }

    /// `sigma_t^(rho)` without the `(2 pi)^(n/2)` factor.
    fn sphere_kernel(&self, t: f64, rho: f64) -> f64 {
        t.powi(self.spec.n as i32 - 1) * j_scaled(order(self.spec.n), t * rho)
    }

    /// `psi^_{mu k}(rho) = c_{mu k} theta_mu(rho) sigma_t^(rho)`.
    pub fn atom_spectrum(&self, idx: FrameIndex, rho: f64) -> Result<f64> {
        self.table.check(idx)?;
        let th = frame_band(idx.mu, rho);
        if th == 0.0 {
            return Ok(0.0);
        }
        let t = self.radius(idx.mu, idx.k);
        Ok(self.constant_unchecked(idx.mu, idx.k) * th * forward_constant(self.spec.n) * self.sphere_kernel(t, rho))
    }

    /// The space-side atom `psi_{mu k}`.
    pub fn atom(&self, idx: FrameIndex) -> Result<RadialProfile> {
        let mut g = CoefficientGrid::zeros(self.spec.n, self.spec.mu_max, self.spec.k_max);
        g.set(idx, 1.0)?;
        synthesize(&g, self)
    }

    /// `sum_k lambda_{mu k} c_{mu k} sigma_t^(rho)` for one band.
    fn band_sum(&self, grid: &CoefficientGrid, mu: u32, rho: f64) -> f64 {
        let row = grid.row(mu);
        let mut s = 0.0;
        for (i, &l) in row.iter().enumerate() {
            if l != 0.0 {
                let k = i as u32 + 1;
                s += l * self.constant_unchecked(mu, k) * self.sphere_kernel(self.radius(mu, k), rho);
            }
        }
        s
    }

    fn check_grid(&self, grid: &CoefficientGrid) -> Result<()> {
        let g = FrameSpec::new(grid.n, grid.mu_max, grid.k_max);
        if g != self.spec {
            return Err(AflError::invalid(format!(
                "coefficient grid truncation {g:?} differs from frame {:?}",
                self.spec
            )));
        }
        Ok(())
    }

    /// `(T lambda)^(rho)`.
    pub fn synthesized_spectrum(&self, grid: &CoefficientGrid, rho: f64) -> f64 {
        let mut total = 0.0;
        for mu in 0..=grid.mu_max.min(self.spec.mu_max) {
            let th = frame_band(mu, rho);
            if th != 0.0 {
                total += th * self.band_sum(grid, mu, rho);
            }
        }
        forward_constant(self.spec.n) * total
    }

    /// Radius beyond which `T lambda` is negligible.
    pub fn synthesized_extent(&self, grid: &CoefficientGrid) -> f64 {
        let floor = EXTENT_FLOOR * grid.max_abs();
        grid.iter()
            .filter(|(_, v)| v.abs() > floor)
            .map(|(idx, _)| {
                let (_, hi) = frame_band_support(idx.mu);
                self.radius(idx.mu, idx.k) + 400.0 / hi
            })
            .fold(0.0, f64::max)
    }

    /// Frequency interval carrying the spectrum of `T lambda`.
    pub fn synthesized_support(&self, grid: &CoefficientGrid) -> (f64, f64) {
        let mut out: Option<(f64, f64)> = None;
        for mu in 0..=grid.mu_max {
            if grid.row(mu).iter().any(|v| *v != 0.0) {
                let (lo, hi) = frame_band_support(mu);
                out = Some(match out {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        out.unwrap_or((0.0, 0.0))
    }

    /// Frequency rule on `[0, hi]` fine enough for the sphere transforms of
    /// every band overlapping each cell.
    fn frequency_rule(&self, hi: f64) -> CompositeRule {
        let j_top = self.table.zeros().zero(self.spec.k_max as usize);
        let mut edges: Vec<f64> = (0..=self.spec.mu_max)
            .flat_map(|m| {
                let (a, b) = frame_band_support(m);
                [a, b]
            })
            .filter(|e| *e < hi)
            .collect();
        edges.push(0.0);
        edges.push(hi);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut breaks = vec![0.0];
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let lowest = (0..=self.spec.mu_max).find(|&m| {
                let (lo, hi) = frame_band_support(m);
                mid > lo && mid < hi
            });
            let width = match lowest {
                Some(m) => std::f64::consts::PI * (m as f64).exp2() / j_top,
                None => (b - a) / 32.0,
            };
            let count = ((b - a) / width).ceil().max(1.0) as usize;
            breaks.extend((1..=count).map(|i| if i == count { b } else { a + (b - a) * i as f64 / count as f64 }));
        }
        CompositeRule::from_breaks(&breaks, gl())
    }

    /// `(2 pi)^-n omega int g(rho)^2 rho^(n-1)` over a frequency rule.
    fn energy(&self, rule: &CompositeRule, g: impl Fn(f64) -> f64 + Sync) -> f64 {
        let n = self.spec.n as i32;
        let s: f64 = rule
            .nodes
            .par_iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * g(x).powi(2) * x.powi(n - 1))
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        sphere_area(self.spec.n) * s / (2.0 * std::f64::consts::PI).powi(n)
    }

    /// `||T lambda||_{L^2}`.
    pub fn synthesized_l2(&self, grid: &CoefficientGrid) -> f64 {
        let (_, hi) = self.synthesized_support(grid);
        if hi == 0.0 {
            return 0.0;
        }
        let rule = self.frequency_rule(hi);
        self.energy(&rule, |x| self.synthesized_spectrum(grid, x)).sqrt()
    }

    /// `T lambda (r)` by inverse transform of each band.
    pub fn synthesized_value(&self, grid: &CoefficientGrid, r: f64) -> f64 {
        let n = self.spec.n;
        let nu = order(n);
        let mut total = 0.0;
        for mu in 0..=grid.mu_max.min(self.spec.mu_max) {
            if grid.row(mu).iter().all(|v| *v == 0.0) {
                continue;
            }
            let (lo, hi) = frame_band_support(mu);
            let t_top = self.radius(mu, self.spec.k_max);
            let width = (std::f64::consts::PI / (t_top + r)).min((hi - lo) / 16.0);
            let rule = CompositeRule::uniform(lo, hi, width, gl());
            total += rule.integrate(|rho| {
                frame_band(mu, rho) * self.band_sum(grid, mu, rho) * rho.powi(n as i32 - 1) * j_scaled(nu, r * rho)
            });
        }
        total
    }
}

/// Sampled frequency-side atom `psi^_{mu k}` on its band support.
pub fn atom_frequency_profile(frame: &Frame, idx: FrameIndex) -> Result<RadialProfile> {
    frame.table.check(idx)?;
    let (lo, hi) = frame_band_support(idx.mu);
    let lo = if lo > 0.0 { lo } else { hi * 1e-6 };
    RadialProfile::sample_log_uniform(frame.n(), lo, hi, 4096, Interpolation::LogLinear, |rho| {
        frame.atom_spectrum(idx, rho).unwrap_or(0.0)
    })
}

/// `S f = (<f, psi_{mu k}>)`, paired on the frequency side.
pub fn analyze(f: &RadialProfile, frame: &Frame) -> Result<CoefficientGrid> {
    if f.n != frame.n() {
        return Err(AflError::invalid("profile and frame dimensions differ"));
    }
    let FrameSpec { n, mu_max, k_max } = frame.spec;
    let mut grid = CoefficientGrid::zeros(n, mu_max, k_max);
    if f.is_zero() {
        return Ok(grid);
    }
    let c = forward_constant(n);
    for mu in 0..=mu_max {
        let rule = &frame.rules[mu as usize];
        let spec: Vec<f64> = rule.nodes.par_iter().map(|&rho| f.spectrum(rho)).collect();
        if let Some(bad) = spec.iter().find(|v| !v.is_finite()) {
            return Err(AflError::Numerical(format!("spectrum value {bad} in band {mu}")));
        }
        let g: Vec<f64> = spec.iter().zip(&rule.pairing).map(|(s, p)| s * p).collect();
        if g.iter().all(|v| *v == 0.0) {
            continue;
        }
        let row: Vec<f64> = (1..=k_max)
            .into_par_iter()
            .map(|k| {
                let t = frame.radius(mu, k);
                let s: f64 = rule
                    .nodes
                    .iter()
                    .zip(&g)
                    .map(|(&rho, &gi)| gi * frame.sphere_kernel(t, rho))
                    .sum();
                c * frame.constant_unchecked(mu, k) * s
            })
            .collect();
        let k0 = mu as usize * k_max as usize;
        grid.values[k0..k0 + k_max as usize].copy_from_slice(&row);
    }
    Ok(grid)
}

/// `T lambda = sum lambda_{mu k} psi_{mu k}`.
pub fn synthesize(lam: &CoefficientGrid, frame: &Frame) -> Result<RadialProfile> {
    lam.validate()?;
    frame.check_grid(lam)?;
    if lam.is_zero() {
        return Ok(RadialProfile::zero(lam.n));
    }
    RadialProfile::new(
        lam.n,
        ProfileForm::Synthesized {
            coefficients: lam.clone(),
        },
    )
}

/// `T S f` and `||T S f - f||_{L^2} / ||f||_{L^2}`.
pub fn reconstruct(f: &RadialProfile, frame: &Frame) -> Result<(RadialProfile, f64)> {
    let lam = analyze(f, frame)?;
    let out = synthesize(&lam, frame)?;
    let err = reconstruction_error(f, &lam, frame)?;
    Ok((out, err))
}

/// `||T lambda - f||_{L^2} / ||f||_{L^2}`, evaluated on the frequency side.
/// Energy of `f` above the covered frequency band counts as error.
pub fn reconstruction_error(f: &RadialProfile, lam: &CoefficientGrid, frame: &Frame) -> Result<f64> {
    lam.validate()?;
    frame.check_grid(lam)?;
    if f.n != lam.n {
        return Err(AflError::invalid("profile and coefficient dimensions differ"));
    }
    let total = f.l2_norm();
    if total == 0.0 {
        return Ok(frame.synthesized_l2(lam));
    }
    let covered = frame.bank.covered_limit();
    let hi = f.freq_extent().map_or(covered, |e| e.min(covered));
    let rule = frame.frequency_rule(hi);
    let err = frame.energy(&rule, |x| frame.synthesized_spectrum(lam, x) - f.spectrum(x));
    let inside = frame.energy(&rule, |x| f.spectrum(x));
    let outside = (total * total - inside).max(0.0);
    let beyond = if hi < covered { 0.0 } else { outside };
    Ok((err + beyond).sqrt() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> Arc<Frame> {
        Frame::shared(FrameSpec::new(3, 6, 64)).unwrap()
    }

    #[test]
    fn constants_follow_closed_form() {
        let fr = small();
        // n = 3: j_k = k pi, J_{3/2}(k pi)^2 = 2/(k pi^2)
        for k in [1u32, 5, 20] {
            let j = k as f64 * PI;
            let want = 2.0 / (j.powi(3) * (2.0 / (k as f64 * PI * PI)) * 4.0 * PI);
            let got = fr.constant(FrameIndex { mu: 0, k }).unwrap();
            assert!((got * got / want - 1.0).abs() < 1e-10);
            let got2 = fr.constant(FrameIndex { mu: 2, k }).unwrap();
            assert!((got2 * got2 / (4.0 * want) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn atom_support_inside_band() {
        let fr = small();
        let idx = FrameIndex { mu: 3, k: 4 };
        for i in 0..400 {
            let rho = i as f64 * 0.05;
            let v = fr.atom_spectrum(idx, rho).unwrap();
            if !(2.0..=8.0).contains(&rho) {
                assert_eq!(v, 0.0, "rho = {rho}");
            }
        }
    }

    #[test]
    fn sphere_transform_at_origin_is_surface_area() {
        let fr = small();
        let t = 1.7;
        let v = forward_constant(3) * fr.sphere_kernel(t, 0.0);
        let mass = crate::spectral::sphere_measure_mass(3, t);
        assert!((v - mass).abs() < 1e-12 * mass);
    }

    #[test]
    fn zero_profile_analyzes_to_zero() {
        let fr = small();
        let g = analyze(&RadialProfile::zero(3), &fr).unwrap();
        assert!(g.is_zero());
        assert!(synthesize(&g, &fr).unwrap().is_zero());
        assert_eq!(reconstruct(&RadialProfile::zero(3), &fr).unwrap().1, 0.0);
    }

    #[test]
    fn band_limited_input_touches_adjacent_bands_only() {
        let fr = small();
        let f = RadialProfile::new(3, ProfileForm::BandBump { center: 4.5, width: 0.5 }).unwrap();
        let g = analyze(&f, &fr).unwrap();
        for mu in 0..=6 {
            let m = g.row(mu).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(2..=4).contains(&mu) {
                assert_eq!(m, 0.0, "band {mu}");
            }
        }
    }

    #[test]
    fn single_coefficient_synthesizes_its_atom() {
        let fr = small();
        let idx = FrameIndex { mu: 2, k: 3 };
        let atom = fr.atom(idx).unwrap();
        let mut g = CoefficientGrid::zeros(3, 6, 64);
        g.set(idx, 1.0).unwrap();
        let p = synthesize(&g, &fr).unwrap();
        for &rho in &[1.2, 2.0, 3.1] {
            let want = fr.atom_spectrum(idx, rho).unwrap();
            assert!((p.spectrum(rho) - want).abs() <= 1e-14 * want.abs());
        }
        assert!((p.l2_norm() - atom.l2_norm()).abs() < 1e-12);
        let g2 = g.scaled(2.0);
        let p2 = synthesize(&g2, &fr).unwrap();
        for &r in &[0.3, 1.5, 4.0] {
            assert!((p2.value(r) - 2.0 * p.value(r)).abs() <= 1e-14 * p.value(r).abs().max(1e-300) * 4.0);
        }
    }

    #[test]
    fn synthesized_value_matches_spectrum_inverse() {
        // oracle: plain inverse quadrature of the synthesized spectrum
        let fr = small();
        let mut g = CoefficientGrid::zeros(3, 6, 64);
        g.set(FrameIndex { mu: 1, k: 2 }, 0.7).unwrap();
        g.set(FrameIndex { mu: 2, k: 5 }, -0.4).unwrap();
        for &r in &[0.5, 2.0, 6.0] {
            let got = fr.synthesized_value(&g, r);
            let rule = CompositeRule::uniform(0.0, 4.0, 0.01, &GaussLegendre::new(16));
            let want = rule.integrate(|x| {
                fr.synthesized_spectrum(&g, x) * x * x * j_scaled(0.5, r * x)
            }) / forward_constant(3);
            assert!((got - want).abs() < 1e-10 * want.abs().max(1e-3), "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn gaussian_reconstructs() {
        let fr = Frame::shared(FrameSpec::new(3, 6, 256)).unwrap();
        let f = RadialProfile::gaussian(3, 1.0).unwrap();
        let (_, err) = reconstruct(&f, &fr).unwrap();
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn csv_and_json_round_trip_bit_exact() {
        let mut g = CoefficientGrid::zeros(3, 2, 5);
        let mut x = 0.1234567890123456789f64;
        for (i, idx) in (0..=2).flat_map(|m| (1..=5).map(move |k| FrameIndex { mu: m, k })).enumerate() {
            x = (x * 3.7 + i as f64).fract() - 0.5;
            g.set(idx, x * 10f64.powi(i as i32 - 7)).unwrap();
        }
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = CoefficientGrid::read_csv(3, buf.as_slice()).unwrap();
        assert_eq!(back, g);
        let j = CoefficientGrid::from_json(&g.to_json().unwrap()).unwrap();
        assert!(j.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_mismatched_truncation() {
        let fr = small();
        let g = CoefficientGrid::zeros(3, 5, 64);
        assert!(synthesize(&g, &fr).is_err());
        assert!(fr.constant(FrameIndex { mu: 7, k: 1 }).is_err());
    }
}
