//! Numeric evaluation of the general mass-ratio conditions.
//!
//! The ratio `w2_{mu k}/w1_{mu k} = (int_A w2)^{1/p2} / (int_A w1)^{1/p1}`
//! (the `|A|^{-1/2}` factors cancel) is evaluated on the annulus table and,
//! for weights with a feature radius, further out with asymptotic zeros. Its
//! power-law exponent in `k` and the geometric rate of the scale sequence
//! `a_mu` in `mu` are fitted and compared with their thresholds.

use rayon::prelude::*;

use super::{Diagnostics, EmbeddingDecision, EmbeddingQuery, Method, Verdict};
use crate::error::{AflError, Result};
use crate::extended::recip;
use crate::special::mcmahon;
use crate::spectral::SpaceKind;
use crate::weights::WeightSpec;

/// Fitted exponents closer to zero than this are exact ties (constant
/// ratios).
const FLAT: f64 = 1e-9;
const WINDOW_POINTS: usize = 33;
const BRIDGE_PER_OCTAVE: f64 = 8.0;
/// Largest `k` probed with asymptotic zeros.
const K_CAP: f64 = 1e12;

struct RatioModel {
    w1: WeightSpec,
    w2: WeightSpec,
    ip1: f64,
    ip2: f64,
    nu: f64,
    zeros: Vec<f64>,
    feature: f64,
}

impl RatioModel {
    fn new(query: &EmbeddingQuery) -> Result<Self> {
        let (a, b) = (&query.source, &query.target);
        let n = a.n;
        let table = crate::seqspace::annulus_table(n, query.config.mu_max, query.config.k_max)?;
        let zeros = (0..=query.config.k_max as usize).map(|k| table.zeros().zero(k)).collect();
        Ok(Self {
            w1: a.weight.with_dimension(n)?,
            w2: b.weight.with_dimension(n)?,
            ip1: recip(a.p),
            ip2: recip(b.p),
            nu: table.nu(),
            zeros,
            feature: a.weight.feature_radius().max(b.weight.feature_radius()),
        })
    }

    fn zero(&self, k: u64) -> f64 {
        match self.zeros.get(k as usize) {
            Some(z) => *z,
            None => mcmahon(self.nu, k as usize),
        }
    }

    fn ratio(&self, mu: u32, k: u64) -> Result<f64> {
        let scale = (-(mu as f64)).exp2();
        let (lo, hi) = (scale * self.zero(k - 1), scale * self.zero(k));
        let part = |w: &WeightSpec, ip: f64| -> Result<f64> {
            if ip == 0.0 {
                return Ok(1.0);
            }
            let i = w.shell_integral(lo, hi)?;
            if !(i.is_finite() && i > 0.0) {
                return Err(AflError::DivergentIntegral {
                    mu,
                    k: k.min(u32::MAX as u64) as u32,
                    detail: format!("weight integral {i}"),
                });
            }
            Ok(i.powf(ip))
        };
        Ok(part(&self.w2, self.ip2)? / part(&self.w1, self.ip1)?)
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn geometric_ks(lo: f64, hi: f64, count: usize) -> Vec<u64> {
    let mut ks: Vec<u64> = (0..count)
        .map(|i| (lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).round() as u64)
        .collect();
    ks.dedup();
    ks
}

/// One scale: the fitted `k` exponent and `log2` of the inner `l_{p*}` norm
/// (`None` when a finite-`p*` tail diverges by the fit).
struct ScaleFit {
    k_exponent: f64,
    log2_inner: Option<f64>,
}

fn fit_scale(model: &RatioModel, mu: u32, k_max: u32, cfg_window: f64, reach: f64, ps_inv: f64) -> Result<ScaleFit> {
    let kk = k_max as f64;
    let k_tail = if model.feature > 0.0 {
        (reach * model.feature * (mu as f64).exp2() / std::f64::consts::PI).ceil().clamp(kk, K_CAP)
    } else {
        kk
    };
    let window = geometric_ks((cfg_window * k_tail).max(2.0), k_tail, WINDOW_POINTS);
    let win_vals = window.iter().map(|&k| model.ratio(mu, k)).collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = window.iter().map(|&k| (k as f64).ln()).collect();
    let ly: Vec<f64> = win_vals.iter().map(|v| v.ln()).collect();
    let e = slope(&lx, &ly);
    let table_vals = (1..=k_max as u64).map(|k| model.ratio(mu, k)).collect::<Result<Vec<f64>>>()?;
    // samples between the table and the fit window, then the window itself
    let mut outer: Vec<(f64, f64)> = Vec::new();
    if k_tail > kk {
        let start = window[0] as f64;
        if start > kk {
            let count = ((start / kk).log2() * BRIDGE_PER_OCTAVE).ceil().max(2.0) as usize + 1;
            for k in geometric_ks(kk, start, count) {
                if k as f64 > kk && (k as f64) < start {
                    outer.push((k as f64, model.ratio(mu, k)?));
                }
            }
        }
        outer.extend(window.iter().zip(&win_vals).filter(|(k, _)| **k as f64 > kk).map(|(k, v)| (*k as f64, *v)));
    }
    let peak = table_vals.iter().chain(outer.iter().map(|(_, v)| v)).fold(0.0f64, |m, v| m.max(*v));
    if ps_inv == 0.0 {
        // truncated sup; a growing tail is judged by the k exponent
        return Ok(ScaleFit { k_exponent: e, log2_inner: Some(peak.log2()) });
    }
    let ps = 1.0 / ps_inv;
    if ps * e >= -1.0 {
        return Ok(ScaleFit { k_exponent: e, log2_inner: None });
    }
    let term = |v: f64| (v / peak).powf(ps);
    let mut sum: f64 = table_vals.iter().map(|v| term(*v)).sum();
    let mut prev = (kk, term(*table_vals.last().expect("k_max >= 1")));
    for &(k, v) in &outer {
        let t = term(v);
        sum += 0.5 * (t + prev.1) * (k - prev.0);
        prev = (k, t);
    }
    // power-law tail past the last sample
    sum += prev.1 * prev.0 / (-1.0 - ps * e);
    Ok(ScaleFit {
        k_exponent: e,
        log2_inner: Some(peak.log2() + sum.log2() / ps),
    })
}

/// Sign of a fitted margin against the inconclusive band.
fn classify(margin: f64, eps: f64) -> Verdict {
    if margin >= eps {
        Verdict::HoldsBySufficientCondition
    } else if margin <= -eps {
        Verdict::NotImplied
    } else {
        Verdict::OutOfTheoremScope
    }
}

struct Evaluation {
    continuity: Verdict,
    margin: f64,
    k_exponent: f64,
    k_flat: bool,
    mu_slope: f64,
    mu_flat: bool,
    diag: Diagnostics,
}

fn evaluate(query: &EmbeddingQuery, ps_inv: f64, qs_inv: f64) -> Result<Evaluation> {
    let cfg = query.config;
    let model = RatioModel::new(query)?;
    let ds = query.source.s - query.target.s;
    let fits = (0..=cfg.mu_max)
        .into_par_iter()
        .map(|mu| fit_scale(&model, mu, cfg.k_max, cfg.k_window, cfg.feature_reach, ps_inv))
        .collect::<Result<Vec<ScaleFit>>>()?;
    let k_exponent = fits.iter().map(|f| f.k_exponent).fold(f64::NEG_INFINITY, f64::max);
    let k_flat = fits.iter().all(|f| f.k_exponent.abs() < FLAT);
    let log2_a: Vec<Option<f64>> = fits
        .iter()
        .enumerate()
        .map(|(mu, f)| f.log2_inner.map(|v| v - mu as f64 * ds))
        .collect();
    let (k_verdict, k_margin) = if ps_inv == 0.0 {
        if k_flat {
            (Verdict::HoldsBySufficientCondition, 0.0)
        } else {
            (classify(-k_exponent, cfg.eps_margin), -k_exponent)
        }
    } else if k_flat {
        (Verdict::NotImplied, -ps_inv)
    } else {
        let m = -k_exponent - ps_inv;
        (classify(m, cfg.eps_margin), m)
    };
    let first = cfg.mu_max / 2;
    let window: Vec<(f64, f64)> = (first..=cfg.mu_max)
        .filter_map(|mu| log2_a[mu as usize].map(|v| (mu as f64, v)))
        .collect();
    let (mu_slope, mu_flat) = if window.len() == (cfg.mu_max - first + 1) as usize {
        let (x, y): (Vec<f64>, Vec<f64>) = window.into_iter().unzip();
        let s = slope(&x, &y);
        (s, s.abs() < FLAT)
    } else {
        (f64::NAN, false)
    };
    let (mu_verdict, mu_margin) = if mu_slope.is_nan() {
        // inner sums diverge: the k verdict already says why
        (k_verdict, k_margin)
    } else if mu_flat {
        if qs_inv == 0.0 {
            (Verdict::HoldsBySufficientCondition, 0.0)
        } else {
            (Verdict::NotImplied, 0.0)
        }
    } else {
        (classify(-mu_slope, cfg.eps_margin), -mu_slope)
    };
    let mut diag = query.exponents().diagnostics();
    diag.k_exponent = Some(k_exponent);
    diag.mu_slope = mu_slope.is_finite().then_some(mu_slope);
    diag.k_exponents = fits.iter().map(|f| f.k_exponent).collect();
    diag.log2_scale_terms = log2_a;
    if let (Some((g1, _)), Some((g2, _))) = (query.source.weight.exponents(), query.target.weight.exponents()) {
        diag.weight_gap = Some(g1 * recip(query.source.p) - g2 * recip(query.target.p));
    }
    let continuity = k_verdict.and(mu_verdict);
    let margin = k_margin.min(mu_margin);
    Ok(Evaluation {
        continuity,
        margin,
        k_exponent,
        k_flat,
        mu_slope,
        mu_flat,
        diag,
    })
}

/// Strict decay of the ratio in `k` at every scale.
fn k_divergence(ev: &Evaluation, eps: f64) -> (Verdict, f64) {
    if ev.k_flat {
        (Verdict::NotImplied, 0.0)
    } else {
        (classify(-ev.k_exponent, eps), -ev.k_exponent)
    }
}

/// The general Besov condition through fitted mass ratios.
pub fn check_besov_general(query: &EmbeddingQuery) -> Result<EmbeddingDecision> {
    query.validate()?;
    let method = Method::BesovGeneral;
    let e = query.exponents();
    if query.source.kind != SpaceKind::Besov || query.target.kind != SpaceKind::Besov {
        let mut diag = e.diagnostics();
        diag.notes.push("the general Besov condition needs Besov spaces on both sides".into());
        return Ok(EmbeddingDecision::new(
            Verdict::OutOfTheoremScope,
            Verdict::OutOfTheoremScope,
            0.0,
            method,
            diag,
        ));
    }
    let mut ev = evaluate(query, e.p_star_inv, e.q_star_inv)?;
    let eps = query.config.eps_margin;
    let mut compactness = Verdict::HoldsBySufficientCondition;
    let mut cmargin = f64::INFINITY;
    if e.q_star_infinite() {
        let (v, m) = if ev.mu_flat {
            (Verdict::NotImplied, 0.0)
        } else {
            (classify(-ev.mu_slope, eps), -ev.mu_slope)
        };
        compactness = compactness.and(v);
        cmargin = cmargin.min(m);
    }
    if e.p_star_infinite() {
        let (v, m) = k_divergence(&ev, eps);
        compactness = compactness.and(v);
        cmargin = cmargin.min(m);
    }
    if ev.continuity == Verdict::OutOfTheoremScope {
        ev.diag.notes.push(format!("fitted exponent within {eps} of its threshold"));
    }
    ev.diag.compactness_margin = Some(if cmargin.is_finite() { cmargin } else { ev.margin });
    Ok(EmbeddingDecision::new(ev.continuity, compactness, ev.margin, method, ev.diag))
}

/// The radial-weight Triebel–Lizorkin condition: bounded
/// `2^{-mu(s1-s2)} w2_{mu k}/w1_{mu k}`, compact when `w1/w2` grows in `k`.
pub fn check_tl_general(query: &EmbeddingQuery) -> Result<EmbeddingDecision> {
    query.validate()?;
    let method = Method::TlGeneral;
    let (a, b) = (&query.source, &query.target);
    let scope = |note: &str, margin: f64| {
        let mut diag = query.exponents().diagnostics();
        diag.notes.push(note.into());
        EmbeddingDecision::new(Verdict::OutOfTheoremScope, Verdict::OutOfTheoremScope, margin, method, diag)
    };
    if a.kind != SpaceKind::TriebelLizorkin || b.kind != SpaceKind::TriebelLizorkin {
        return Ok(scope("the radial-weight condition needs Triebel-Lizorkin spaces on both sides", 0.0));
    }
    if a.p > b.p {
        return Ok(scope("needs p1 <= p2", b.p - a.p));
    }
    let mut ev = evaluate(query, 0.0, 0.0)?;
    let (compactness, cmargin) = k_divergence(&ev, query.config.eps_margin);
    if ev.continuity.holds() && ev.mu_flat && compactness.holds() {
        ev.diag.notes.push(
            "scale factors do not decay; compactness rests on the k-divergence clause alone".into(),
        );
    }
    ev.diag.compactness_margin = Some(cmargin);
    Ok(EmbeddingDecision::new(ev.continuity, compactness, ev.margin, method, ev.diag))
}
