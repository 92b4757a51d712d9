use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{finite_or, CaseResult, SuiteReport};
use crate::annuli::{AnnulusTable, FrameIndex};
use crate::embeddings::{decide_input, CheckInput, Verdict};
use crate::error::{AflError, Result};
use crate::extended::recip;
use crate::frame::{analyze, CoefficientGrid, Frame, FrameSpec};
use crate::seqspace::{b_norm, f_norm, SeqNormParams};
use crate::spectral::{
    besov_norm, build_filter_bank, default_freq_grid, tl_norm, weighted_lp_norm, BankVariant, FilterBank,
    RadialProfile, SpaceKind, SpaceParams,
};
use crate::weights::{in_ap_class, verify_product_lemma, ApPlan, WeightSpec};

const BANK_POINTS_PER_OCTAVE: usize = 32;

fn lp_bank(n: u32, mu_max: u32) -> Result<FilterBank> {
    build_filter_bank(BankVariant::Lp, n, mu_max, &default_freq_grid(mu_max, BANK_POINTS_PER_OCTAVE))
}

fn space_norm(f: &RadialProfile, params: &SpaceParams, bank: &FilterBank) -> Result<f64> {
    Ok(match params.kind {
        SpaceKind::Besov => besov_norm(f, params, bank)?.value,
        SpaceKind::TriebelLizorkin => tl_norm(f, params, bank)?.value,
    })
}

fn seq_params(params: &SpaceParams) -> Result<SeqNormParams> {
    SeqNormParams::new(params.s, params.p, params.q, params.weight.clone())
}

fn seq_norm(lam: &CoefficientGrid, params: &SpaceParams) -> Result<f64> {
    let sp = seq_params(params)?;
    match params.kind {
        SpaceKind::Besov => b_norm(lam, &sp),
        SpaceKind::TriebelLizorkin => f_norm(lam, &sp),
    }
}

/// Least-squares slope.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEquivalenceConfig {
    pub n: u32,
    /// Test functions `exp(-|2^j x|^2 / 2)`.
    pub scales: Vec<i32>,
    pub frame: FrameSpec,
    pub lp_mu_max: u32,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub gamma: Vec<f64>,
    pub spread_limit: f64,
    /// Tolerance of the Triebel–Lizorkin `p = q` rows against the Besov rows.
    pub collapse_tolerance: f64,
}

impl Default for NormEquivalenceConfig {
    fn default() -> Self {
        Self {
            n: 3,
            scales: (-3..=6).collect(),
            frame: FrameSpec::new(3, 10, 256),
            lp_mu_max: 10,
            s: vec![0.5, 1.0],
            p: vec![2.0, 4.0],
            q: vec![2.0, 4.0],
            gamma: vec![0.0, 1.0],
            spread_limit: 50.0,
            collapse_tolerance: 1e-8,
        }
    }
}

/// `||S f||_{b} / ||f||_{B}` over a family of dilated Gaussians; each
/// parameter point passes when the ratios spread by less than the limit.
pub fn norm_equivalence_suite(cfg: &NormEquivalenceConfig) -> Result<SuiteReport> {
    let started = Instant::now();
    if cfg.frame.n != cfg.n {
        return Err(AflError::invalid("frame dimension differs from n"));
    }
    let frame = Frame::shared(cfg.frame)?;
    let bank = lp_bank(cfg.n, cfg.lp_mu_max)?;
    let family = cfg
        .scales
        .iter()
        .map(|&j| RadialProfile::gaussian(cfg.n, (j as f64).exp2()))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = family.iter().map(|f| analyze(f, &frame)).collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for &s in &cfg.s {
        for &p in &cfg.p {
            for &q in &cfg.q {
                for &g in &cfg.gamma {
                    points.push((s, p, q, g));
                }
            }
        }
    }
    let mut report = SuiteReport::new(
        "norm_equivalence",
        json!({"s": cfg.s, "p": cfg.p, "q": cfg.q, "gamma": cfg.gamma, "scales": cfg.scales}),
        json!({"frame": cfg.frame, "lp_mu_max": cfg.lp_mu_max, "family": "gaussian exp(-|2^j x|^2/2)"}),
    );
    let ratios = |params: &SpaceParams| -> Result<Vec<f64>> {
        family
            .par_iter()
            .zip(coeffs.par_iter())
            .map(|(f, lam)| Ok(seq_norm(lam, params)? / space_norm(f, params, &bank)?))
            .collect()
    };
    for (s, p, q, g) in points {
        let w = WeightSpec::power(cfg.n, g)?;
        let params = SpaceParams::besov(s, p, q, w.clone())?;
        let r = ratios(&params)?;
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let spread = hi / lo;
        let mut case = CaseResult::new(
            format!("besov s={s} p={p} q={q} gamma={g}"),
            json!({"kind": "besov", "s": s, "p": p, "q": q, "gamma": g}),
            cfg.spread_limit,
        )
        .metric("spread", finite_or(spread, f64::MAX))
        .metric("min_ratio", lo)
        .metric("max_ratio", hi);
        for (j, v) in cfg.scales.iter().zip(&r) {
            case = case.metric(&format!("ratio_j{j}"), *v);
        }
        report.cases.push(case.passed(spread.is_finite() && spread < cfg.spread_limit));
        if p == q {
            let tl = SpaceParams::triebel_lizorkin(s, p, q, w)?;
            let rt = ratios(&tl)?;
            let worst = r
                .iter()
                .zip(&rt)
                .map(|(a, b)| ((a - b) / a).abs())
                .fold(0.0f64, f64::max);
            report.cases.push(
                CaseResult::new(
                    format!("tl collapse s={s} p={p} gamma={g}"),
                    json!({"kind": "triebel_lizorkin", "s": s, "p": p, "q": q, "gamma": g}),
                    cfg.collapse_tolerance,
                )
                .metric("max_relative_difference", worst)
                .passed(worst <= cfg.collapse_tolerance),
            );
        }
    }
    Ok(report.finish(started))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessFamily {
    /// `f_j(x) = exp(-|2^j x|^2 / 2)`.
    Dilation,
    /// Single coefficients at `(0, 2^j)`: mass moving out radially.
    RadialTranslation,
    /// Single coefficients at `(j, 1)`: mass moving up in frequency.
    Modulation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub steps: Vec<i32>,
    pub lp_mu_max: u32,
    /// Bounded families may not grow past this factor over their first ratio.
    pub bounded_growth: f64,
    /// Relative tolerance of a fitted growth slope.
    pub slope_tolerance: f64,
    pub mu_max: u32,
    pub k_max: u32,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            steps: (3..=10).collect(),
            lp_mu_max: 14,
            bounded_growth: 2.0,
            slope_tolerance: 0.2,
            mu_max: 12,
            k_max: 256,
        }
    }
}

/// Source and target of a witness probe.
struct Probe {
    source: SpaceParams,
    target: SpaceParams,
    /// `L^q(w)` target instead of a smoothness space.
    lebesgue: bool,
}

fn probe(input: &CheckInput) -> Result<Probe> {
    match input {
        CheckInput::Embedding(q) => {
            let q = q.clone().normalized()?;
            Ok(Probe {
                source: q.source,
                target: q.target,
                lebesgue: false,
            })
        }
        CheckInput::BesselPotential(b) => {
            let q = b.as_embedding()?;
            Ok(Probe {
                source: q.source,
                target: q.target,
                lebesgue: true,
            })
        }
    }
}

/// Dilation exponent of `||f(2^j .)||` for a space with piecewise-power
/// weight; `inner` picks the exponent near the origin.
fn homogeneity(params: &SpaceParams, inner: bool) -> f64 {
    let Some((a, b)) = params.weight.exponents() else {
        return f64::NAN;
    };
    let g = if inner { a } else { b };
    params.s - (params.n as f64 + g) * recip(params.p)
}

/// Ratios `||f_j||_target / ||f_j||_source` along a family, judged against the
/// decision: bounded when the embedding holds, growing at the homogeneity
/// rate when it is not implied.
pub fn witness_suite(input: &CheckInput, family: WitnessFamily, cfg: &WitnessConfig) -> Result<SuiteReport> {
    let started = Instant::now();
    let pr = probe(input)?;
    let decision = decide_input(input)?;
    let n = pr.source.n;
    let mut report = SuiteReport::new(
        &format!("witness_{}", serde_json::to_value(family)?.as_str().unwrap_or("family")),
        json!({"input": input, "steps": cfg.steps}),
        json!({"decision": decision, "lp_mu_max": cfg.lp_mu_max, "mu_max": cfg.mu_max, "k_max": cfg.k_max}),
    );
    let (xs, ratios, predicted): (Vec<f64>, Vec<f64>, f64) = match family {
        WitnessFamily::Dilation => {
            let bank = lp_bank(n, cfg.lp_mu_max)?;
            let rows = cfg
                .steps
                .iter()
                .map(|&j| {
                    let f = RadialProfile::gaussian(n, (j as f64).exp2())?;
                    let src = space_norm(&f, &pr.source, &bank)?;
                    let tgt = if pr.lebesgue {
                        weighted_lp_norm(&f, &pr.target.weight, pr.target.p)?
                    } else {
                        space_norm(&f, &pr.target, &bank)?
                    };
                    Ok((j as f64, tgt / src))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let predicted = homogeneity(&pr.target, true) - homogeneity(&pr.source, true);
            let (x, r) = rows.into_iter().unzip();
            (x, r, predicted)
        }
        WitnessFamily::RadialTranslation | WitnessFamily::Modulation => {
            let radial = family == WitnessFamily::RadialTranslation;
            let table = AnnulusTable::new(n, cfg.mu_max, cfg.k_max)?;
            let mut rows = Vec::new();
            for &j in &cfg.steps {
                let idx = if radial {
                    FrameIndex { mu: 0, k: 1u32 << j.max(0) }
                } else {
                    FrameIndex { mu: j.max(0) as u32, k: 1 }
                };
                if table.check(idx).is_err() {
                    continue;
                }
                let mut lam = CoefficientGrid::zeros(n, cfg.mu_max, cfg.k_max);
                lam.set(idx, 1.0)?;
                rows.push((j as f64, seq_norm(&lam, &pr.target)? / seq_norm(&lam, &pr.source)?));
            }
            if rows.len() < 2 {
                return Err(AflError::invalid("witness steps leave fewer than two indices in the table"));
            }
            let predicted = if radial {
                mass_exponent_in_k(&pr.source, &pr.target)
            } else {
                let (s, t) = (&pr.source, &pr.target);
                let h = |p: &SpaceParams| p.weight.exponents().map_or(f64::NAN, |(a, _)| (n as f64 + a) * recip(p.p));
                t.s - s.s - h(t) + h(s)
            };
            let (x, r) = rows.into_iter().unzip();
            (x, r, predicted)
        }
    };
    for (x, r) in xs.iter().zip(&ratios) {
        report.cases.push(
            CaseResult::new(format!("step {x}"), json!({"j": x}), 0.0)
                .metric("ratio", *r)
                .passed(r.is_finite() && *r > 0.0),
        );
    }
    let logs: Vec<f64> = ratios.iter().map(|r| r.log2()).collect();
    let fitted = slope(&xs, &logs);
    let growth = ratios.iter().fold(0.0f64, |m, r| m.max(*r)) / ratios[0];
    let monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    // coefficient families near a zero exponent get an absolute floor
    let slope_floor = if family == WitnessFamily::Dilation { 0.0 } else { 0.25 };
    let slope_ok =
        predicted.is_finite() && (fitted - predicted).abs() <= cfg.slope_tolerance * predicted.abs().max(slope_floor);
    let verdict = match family {
        WitnessFamily::Dilation | WitnessFamily::Modulation => decision.continuity,
        WitnessFamily::RadialTranslation => decision.compactness,
    };
    let (expectation, ok) = judge(family, verdict, predicted, fitted, growth, monotone, slope_ok, cfg);
    report.cases.push(
        CaseResult::new(
            "trend",
            json!({"expectation": expectation, "verdict": verdict}),
            if expectation == "bounded" { cfg.bounded_growth } else { cfg.slope_tolerance },
        )
        .metric("fitted_slope", fitted)
        .metric("predicted_slope", finite_or(predicted, f64::MAX))
        .metric("growth", growth)
        .metric("monotone", if monotone { 1.0 } else { 0.0 })
        .passed(ok),
    );
    Ok(report.finish(started))
}

#[allow(clippy::too_many_arguments)]
fn judge(
    family: WitnessFamily,
    verdict: Verdict,
    predicted: f64,
    fitted: f64,
    growth: f64,
    monotone: bool,
    slope_ok: bool,
    cfg: &WitnessConfig,
) -> (&'static str, bool) {
    match (family, verdict) {
        (WitnessFamily::RadialTranslation, Verdict::HoldsBySufficientCondition) => {
            // compactness: the ratios decay along the escaping family
            ("decaying", fitted < 0.0 && slope_ok)
        }
        (_, Verdict::HoldsBySufficientCondition) => ("bounded", growth <= cfg.bounded_growth),
        (_, Verdict::NotImplied) if predicted > 0.0 => ("growing", monotone && slope_ok),
        _ => ("homogeneity", slope_ok || !predicted.is_finite()),
    }
}

/// `k` exponent of the mass ratio for piecewise-power weights, from the
/// outer exponents.
fn mass_exponent_in_k(source: &SpaceParams, target: &SpaceParams) -> f64 {
    let (Some((_, b1)), Some((_, b2))) = (source.weight.exponents(), target.weight.exponents()) else {
        return f64::NAN;
    };
    let (ip1, ip2) = (recip(source.p), recip(target.p));
    let n = source.n as f64;
    b2 * ip2 - b1 * ip1 + (n - 1.0) * (ip2 - ip1)
}

/// The annulus product inequality over a weight grid, and the `A_p`
/// classification of power weights against `-n < gamma < n(p-1)`.
pub fn lemma_suite() -> Result<SuiteReport> {
    let started = Instant::now();
    let gammas = [-1.0, 0.0, 1.0, 2.0];
    let epsilons = [0.01, 0.05];
    let (mu_max, k_max) = (6, 32);
    const PRODUCT_BOUND: f64 = 4.0;
    let mut report = SuiteReport::new(
        "lemma",
        json!({"gammas": gammas, "epsilons": epsilons, "mu_max": mu_max, "k_max": k_max,
               "ap_p": [1.5, 2.0, 3.0, 4.0], "ap_n": [2, 3]}),
        json!({"ap_plan": ApPlan::default(), "product_bound": PRODUCT_BOUND}),
    );
    let n = 3;
    let table = AnnulusTable::new(n, mu_max, k_max)?;
    let indices: Vec<FrameIndex> = table.indices().collect();
    for &g1 in &gammas {
        for &g2 in &gammas {
            let w1 = WeightSpec::power(n, g1)?;
            let w2 = WeightSpec::power(n, g2)?;
            let mut prev = 1.0;
            for &eps in &epsilons {
                let ratio = verify_product_lemma(&w1, &w2, eps, &table, &indices)?;
                let ok = if g1 == g2 {
                    ratio == 1.0
                } else {
                    ratio.is_finite() && (1.0..PRODUCT_BOUND).contains(&ratio) && ratio >= prev
                };
                prev = ratio;
                report.cases.push(
                    CaseResult::new(
                        format!("product gamma1={g1} gamma2={g2} eps={eps}"),
                        json!({"gamma1": g1, "gamma2": g2, "eps": eps}),
                        if g1 == g2 { 0.0 } else { PRODUCT_BOUND },
                    )
                    .metric("max_ratio", ratio)
                    .passed(ok),
                );
            }
        }
    }
    let plan = ApPlan::default();
    for nd in [2u32, 3] {
        let nf = nd as f64;
        for p in [1.5, 2.0, 3.0, 4.0] {
            let upper = nf * (p - 1.0);
            let grid = [
                -nf + 0.1,
                -nf + 0.5,
                -1.5,
                -0.5,
                0.0,
                0.5,
                1.0,
                upper - 0.5,
                upper - 0.1,
                upper,
                upper + 0.1,
                upper + 0.5,
                upper + 1.0,
            ];
            for g in grid {
                let w = WeightSpec::power(nd, g)?;
                let got = in_ap_class(&w, p, &plan)?;
                let want = -nf < g && g < upper;
                report.cases.push(
                    CaseResult::new(
                        format!("ap n={nd} p={p} gamma={g}"),
                        json!({"n": nd, "p": p, "gamma": g}),
                        0.0,
                    )
                    .metric("in_class", if got { 1.0 } else { 0.0 })
                    .metric("expected", if want { 1.0 } else { 0.0 })
                    .passed(got == want),
                );
            }
        }
    }
    Ok(report.finish(started))
}
