//! Weighted sequence-space norms `b^s_{p,q}(w)` and `f^s_{p,q}(w)` of
//! frame coefficients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::annuli::{measure_unchecked, AnnulusTable, FrameIndex};
use crate::error::{AflError, Result};
use crate::extended;
use crate::frame::CoefficientGrid;
use crate::weights::{WeightSpec, WeightedMassTable};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeqNormParams {
    pub s: f64,
    #[serde(with = "extended")]
    pub p: f64,
    #[serde(with = "extended")]
    pub q: f64,
    pub weight: WeightSpec,
    pub n: u32,
}

impl SeqNormParams {
    pub fn new(s: f64, p: f64, q: f64, weight: WeightSpec) -> Result<Self> {
        let n = weight.n;
        let sp = Self { s, p, q, weight, n };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(AflError::invalid("smoothness s must be finite"));
        }
        if !(self.p >= 1.0 && self.q >= 1.0) {
            return Err(AflError::invalid(format!(
                "exponents must lie in [1, inf]: p = {}, q = {}",
                self.p, self.q
            )));
        }
        if self.weight.n != self.n {
            return Err(AflError::invalid("weight dimension differs from n"));
        }
        self.weight.validate()
    }

    /// Whether a norm with these exponents is a supremum over the truncated
    /// index set.
    pub fn truncated_sup(&self) -> bool {
        self.p.is_infinite() || self.q.is_infinite()
    }
}

type MassKey = (String, u64, u32, u32, u32);

/// Shared annulus tables and mass tables, keyed by weight and truncation.
pub fn mass_table(w: &WeightSpec, p: f64, n: u32, mu_max: u32, k_max: u32) -> Result<Arc<WeightedMassTable>> {
    static CACHE: OnceLock<Mutex<HashMap<MassKey, Arc<WeightedMassTable>>>> = OnceLock::new();
    let w = w.with_dimension(n)?;
    let key = (serde_json::to_string(&w)?, p.to_bits(), n, mu_max, k_max);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("mass cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = annulus_table(n, mu_max, k_max)?;
    let masses = Arc::new(WeightedMassTable::build(&w, p, &table)?);
    let mut guard = cache.lock().expect("mass cache poisoned");
    if guard.len() >= 256 {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&masses));
    Ok(masses)
}

pub(crate) fn annulus_table(n: u32, mu_max: u32, k_max: u32) -> Result<AnnulusTable> {
    static TABLES: OnceLock<Mutex<HashMap<(u32, u32, u32), AnnulusTable>>> = OnceLock::new();
    let cache = TABLES.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&(n, mu_max, k_max)) {
        return Ok(t.clone());
    }
    let t = AnnulusTable::new(n, mu_max, k_max)?;
    cache
        .lock()
        .expect("table cache poisoned")
        .insert((n, mu_max, k_max), t.clone());
    Ok(t)
}

fn check(lam: &CoefficientGrid, params: &SeqNormParams) -> Result<()> {
    params.validate()?;
    lam.validate()?;
    if lam.n != params.n {
        return Err(AflError::invalid("coefficient grid and norm dimensions differ"));
    }
    Ok(())
}

fn lq(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(sum_mu || sum_k 2^{mu s} |lambda_{mu k}| chi_{mu k} ||^q_{L^p(w)})^{1/q}`
/// through the disjoint-support identity with the masses `w_{mu k}`.
pub fn b_norm(lam: &CoefficientGrid, params: &SeqNormParams) -> Result<f64> {
    check(lam, params)?;
    if lam.is_zero() {
        return Ok(0.0);
    }
    let masses = mass_table(&params.weight, params.p, lam.n, lam.mu_max, lam.k_max)?;
    Ok(b_norm_with(lam, params, &masses))
}

/// [`b_norm`] with a precomputed mass table of matching truncation.
pub fn b_norm_with(lam: &CoefficientGrid, params: &SeqNormParams, masses: &WeightedMassTable) -> f64 {
    let rows = (0..=lam.mu_max).map(|mu| {
        let scale = (mu as f64 * params.s).exp2();
        let terms = lam.row(mu).iter().zip(masses.row(mu)).map(|(l, m)| l.abs() * m);
        scale * lq(terms, params.p)
    });
    lq(rows, params.q)
}

/// `|| (sum_{mu,k} [2^{mu s} |lambda_{mu k}| chi_{mu k}]^q)^{1/q} ||_{L^p(w)}`,
/// integrated exactly over the cells cut out by all annulus boundaries.
pub fn f_norm(lam: &CoefficientGrid, params: &SeqNormParams) -> Result<f64> {
    check(lam, params)?;
    if lam.is_zero() {
        return Ok(0.0);
    }
    let table = annulus_table(lam.n, lam.mu_max, lam.k_max)?;
    let w = params.weight.with_dimension(lam.n)?;
    // per-annulus heights 2^{mu s} |lambda| |A|^{-1/2}
    let heights: Vec<Vec<f64>> = (0..=lam.mu_max)
        .map(|mu| {
            let scale = (mu as f64 * params.s).exp2();
            lam.row(mu)
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let idx = FrameIndex { mu, k: i as u32 + 1 };
                    scale * l.abs() * measure_unchecked(&table, idx).powf(-0.5)
                })
                .collect()
        })
        .collect();
    let mut edges: Vec<f64> = (0..=lam.mu_max)
        .flat_map(|mu| (0..=lam.k_max).map(move |k| (mu, k)))
        .map(|(mu, k)| (-(mu as f64)).exp2() * table.zeros().zero(k as usize))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    for cell in edges.windows(2) {
        let (a, b) = (cell[0], cell[1]);
        let mid = 0.5 * (a + b);
        let g = lq(
            (0..=lam.mu_max).map(|mu| match table.locate(mu, mid) {
                Some(k) => heights[mu as usize][k as usize - 1],
                None => 0.0,
            }),
            params.q,
        );
        if g == 0.0 {
            continue;
        }
        if params.p.is_infinite() {
            total = f64::max(total, g);
        } else {
            total += g.powf(params.p) * w.shell_integral(a, b)?;
        }
    }
    Ok(if params.p.is_infinite() { total } else { total.powf(1.0 / params.p) })
}
