//! The eleven acceptance criteria, one line each on stderr, with pinned
//! tolerances and runtime limits.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use afl_core::annuli::{annulus_bounds, AnnulusTable, FrameIndex};
use afl_core::embeddings::{
    decide, decide_input, BesselPotentialQuery, CheckInput, EmbeddingQuery, Method, Verdict,
};
use afl_core::frame::{reconstruct, CoefficientGrid, Frame, FrameSpec};
use afl_core::harness::{
    lemma_suite, norm_equivalence_suite, witness_suite, NormEquivalenceConfig, WitnessConfig, WitnessFamily,
};
use afl_core::seqspace::{b_norm, f_norm, SeqNormParams};
use afl_core::special::{bessel_j, bessel_zeros};
use afl_core::spectral::{
    besov_norm, build_filter_bank, default_freq_grid, frame_band, lp_band, tl_norm, BandFilter, BankVariant,
    RadialProfile, SpaceParams,
};
use afl_core::weights::{weighted_mass, WeightSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// 1. zeros of J_nu
fn bessel_backbone() -> Outcome {
    const K: usize = 200;
    const RESIDUAL: f64 = 1e-10;
    const SPACING: f64 = 0.05;
    let started = Instant::now();
    let mut worst_residual: f64 = 0.0;
    let mut worst_spacing: f64 = 0.0;
    let mut monotone = true;
    let mut worst_half: f64 = 0.0;
    for nu in [0.0, 0.5, 1.0, 1.5] {
        let table = match bessel_zeros(nu, K) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("nu={nu}: {e}")),
        };
        let z = table.zeros();
        for &j in z {
            worst_residual = worst_residual.max(bessel_j(nu, j).map_or(f64::INFINITY, f64::abs));
        }
        monotone &= z.windows(2).all(|w| w[1] > w[0]);
        for k in 20..K {
            worst_spacing = worst_spacing.max((z[k] - z[k - 1] - PI).abs());
        }
        if nu == 0.5 {
            for (k, &j) in z.iter().enumerate() {
                worst_half = worst_half.max((j - (k + 1) as f64 * PI).abs());
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let ok = worst_residual < RESIDUAL && monotone && worst_spacing < SPACING && worst_half < 1e-10 && secs < 5.0;
    outcome(
        ok,
        format!(
            "max|J(j)|={worst_residual:.1e} (<{RESIDUAL:.0e}), monotone={monotone}, \
             max|spacing-pi|={worst_spacing:.1e} (<{SPACING}), max|j_1/2,k-k pi|={worst_half:.1e} (<1e-10), {secs:.2} s (<5)"
        ),
    )
}

// 2. partition identities of both banks
fn partition_identities() -> Outcome {
    const MU_MAX: u32 = 10;
    const TOL: f64 = 1e-10;
    let started = Instant::now();
    let grid = default_freq_grid(MU_MAX, 256);
    let lp = build_filter_bank(BankVariant::Lp, 3, MU_MAX, &grid);
    let fr = build_filter_bank(BankVariant::Frame, 3, MU_MAX, &grid);
    let (lp, fr) = match (lp, fr) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return outcome(false, format!("bank construction failed: {:?} {:?}", a.err(), b.err())),
    };
    // independent dense sweep of the covered band, linear and logarithmic
    let sweep = |limit: f64, f: &dyn Fn(f64) -> f64| {
        let mut worst: f64 = 0.0;
        let m = 200_000;
        for i in 0..=m {
            let lin = limit * i as f64 / m as f64;
            let log = limit * (-20.0 * i as f64 / m as f64).exp2();
            worst = worst.max((f(lin) - 1.0).abs()).max((f(log) - 1.0).abs());
        }
        worst
    };
    let lp_sweep = sweep(lp.covered_limit(), &|r| (0..=MU_MAX).map(|m| lp_band(m, r)).sum());
    let fr_sweep = sweep(fr.covered_limit(), &|r| (0..=MU_MAX).map(|m| frame_band(m, r).powi(2)).sum());
    let worst = lp.residual.max(fr.residual).max(lp_sweep).max(fr_sweep);
    let secs = started.elapsed().as_secs_f64();
    outcome(
        worst < TOL && secs < 5.0,
        format!(
            "LP residual {:.1e}/{lp_sweep:.1e}, frame residual {:.1e}/{fr_sweep:.1e} (<{TOL:.0e}), {secs:.2} s (<5)",
            lp.residual, fr.residual
        ),
    )
}

// 3. Plancherel for the frame bank
fn frame_plancherel() -> Outcome {
    const TOL: f64 = 1e-6;
    let f = RadialProfile::gaussian(3, 1.0).unwrap();
    let pieces: f64 = (0..=10)
        .map(|mu| f.filtered(BandFilter::Frame { mu }).l2_norm().powi(2))
        .sum();
    // int_{R^3} exp(-|x|^2) dx
    let exact = PI.powf(1.5);
    let computed = f.l2_norm().powi(2);
    let err = rel(pieces, exact).max(rel(computed, exact));
    outcome(
        err < TOL,
        format!("sum of band energies {pieces:?}, ||f||^2 {computed:?}, pi^1.5 {exact:?}, rel err {err:.1e} (<{TOL:.0e})"),
    )
}

// 4. T S = identity on the Gaussian
fn reconstruction() -> Outcome {
    const TOL: f64 = 1e-3;
    // below this the error is at the quadrature floor and no longer tracks k_max
    const FLOOR: f64 = 1e-6;
    let started = Instant::now();
    let f = RadialProfile::gaussian(3, 1.0).unwrap();
    let mut errs = Vec::new();
    for k_max in [4u32, 8, 16, 32, 64, 128, 256] {
        let frame = Frame::shared(FrameSpec::new(3, 10, k_max)).unwrap();
        errs.push((k_max, reconstruct(&f, &frame).unwrap().1));
    }
    let decreasing = errs.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 < FLOOR);
    let last = errs.last().unwrap().1;
    let secs = started.elapsed().as_secs_f64();
    let listing: Vec<String> = errs.iter().map(|(k, e)| format!("{k}:{e:.1e}")).collect();
    outcome(
        last < TOL && decreasing && secs < 60.0,
        format!(
            "rel L2 error at k_max=256 {last:.1e} (<{TOL:.0e}), by k_max [{}] decreasing until {FLOOR:.0e}: {decreasing}, {secs:.1} s (<60)",
            listing.join(" ")
        ),
    )
}

// 5. norm equivalence over dilations
fn norm_equivalence() -> Outcome {
    let cfg = NormEquivalenceConfig::default();
    let r = match norm_equivalence_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let spreads: Vec<f64> = r.cases.iter().filter_map(|c| c.metrics.get("spread").copied()).collect();
    let worst = spreads.iter().copied().fold(0.0f64, f64::max);
    outcome(
        r.passed && spreads.len() == 16 && worst < cfg.spread_limit && r.runtime_seconds < 300.0,
        format!(
            "{} parameter points x {} dilations, max spread {worst:.3} (<{}), {:.1} s (<300)",
            spreads.len(),
            cfg.scales.len(),
            cfg.spread_limit,
            r.runtime_seconds
        ),
    )
}

// 6. p = q collapse of both sequence and function norms
fn p_equals_q_collapse() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_seq: f64 = 0.0;
    for _ in 0..40 {
        let (mu_max, k_max) = (rng.gen_range(1..=6), rng.gen_range(1..=24));
        let values = (0..(mu_max as usize + 1) * k_max as usize)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) })
            .collect();
        let lam = CoefficientGrid::from_values(3, mu_max, k_max, values).unwrap();
        let p = [1.0, 1.5, 2.0, 3.0, 4.0][rng.gen_range(0..5)];
        let gamma = rng.gen_range(-2.5..3.0);
        let s = rng.gen_range(-1.0..2.0);
        let params = SeqNormParams::new(s, p, p, WeightSpec::power(3, gamma).unwrap()).unwrap();
        let (b, f) = (b_norm(&lam, &params).unwrap(), f_norm(&lam, &params).unwrap());
        worst_seq = worst_seq.max(rel(f, b));
    }
    let bank = build_filter_bank(BankVariant::Lp, 3, 10, &default_freq_grid(10, 256)).unwrap();
    let mut worst_fn: f64 = 0.0;
    for (scale, s, p, gamma) in [(1.0, 1.0, 2.0, 0.0), (0.5, 0.5, 4.0, 1.0), (2.0, 1.5, 3.0, -1.0)] {
        let f = RadialProfile::gaussian(3, scale).unwrap();
        let w = WeightSpec::power(3, gamma).unwrap();
        let b = besov_norm(&f, &SpaceParams::besov(s, p, p, w.clone()).unwrap(), &bank).unwrap();
        let t = tl_norm(&f, &SpaceParams::triebel_lizorkin(s, p, p, w).unwrap(), &bank).unwrap();
        worst_fn = worst_fn.max(rel(t.value, b.value));
    }
    outcome(
        worst_seq < TOL && worst_fn < TOL,
        format!("max rel |f-b| on 40 random grids {worst_seq:.1e}, max rel |tl-besov| on 3 Gaussians {worst_fn:.1e} (<{TOL:.0e})"),
    )
}

fn power_query(n: u32, side1: (f64, f64, f64, f64), side2: (f64, f64, f64, f64)) -> EmbeddingQuery {
    let space = |(s, p, q, g): (f64, f64, f64, f64)| SpaceParams::besov(s, p, q, WeightSpec::power(n, g).unwrap()).unwrap();
    EmbeddingQuery::new(space(side1), space(side2)).unwrap()
}

/// Independent closed-form slacks of the power-weight condition: `(k, mu)`.
fn power_slacks(n: f64, side1: (f64, f64, f64, f64), side2: (f64, f64, f64, f64)) -> (f64, f64) {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let (s1, p1, _, g1) = side1;
    let (s2, p2, _, g2) = side2;
    let r = inv(p2) - inv(p1);
    let g = g1 * inv(p1) - g2 * inv(p2);
    let delta = s1 - n * inv(p1) - (s2 - n * inv(p2));
    let k = if r <= 0.0 { g - (n - 1.0) * r } else { g - n * r };
    (k, delta - g)
}

// 7. general condition versus closed forms
fn checker_consistency() -> Outcome {
    const AGREEMENT: f64 = 0.95;
    const MARGIN: f64 = 0.05;
    let exps = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, f64::INFINITY];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let started = Instant::now();
    let mut agree = 0;
    let mut tried = 0;
    let mut disagreements = Vec::new();
    while tried < 200 {
        let n = rng.gen_range(2..=3u32);
        let nf = n as f64;
        let mut side = |s_lo: f64, s_hi: f64| {
            (
                rng.gen_range(s_lo..s_hi),
                exps[rng.gen_range(0..exps.len())],
                exps[rng.gen_range(0..exps.len())],
                rng.gen_range(-nf + 0.2..3.0),
            )
        };
        let a = side(0.0, 3.0);
        let b = side(-1.0, 2.0);
        let (sk, smu) = power_slacks(nf, a, b);
        if sk.abs() < MARGIN || smu.abs() < MARGIN {
            continue;
        }
        tried += 1;
        let q = power_query(n, a, b);
        let closed = decide(&q.clone().with_method(Method::PowerWeights)).unwrap();
        let general = decide(&q.with_method(Method::BesovGeneral)).unwrap();
        if closed.continuity == general.continuity && closed.compactness == general.compactness {
            agree += 1;
        } else if disagreements.len() < 3 {
            disagreements.push(format!("{a:?}->{b:?}"));
        }
    }
    let mut exact = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=3u32);
        let nf = n as f64;
        let alpha = rng.gen_range(-nf + 0.2..3.0);
        let p1 = exps[rng.gen_range(0..exps.len() - 1)];
        let s1 = rng.gen_range(0.0..3.0);
        let source = (s1, p1, exps[rng.gen_range(0..exps.len())], alpha);
        let target = (rng.gen_range(s1 - 2.0..s1), exps[rng.gen_range(0..exps.len())], exps[rng.gen_range(0..exps.len())], 0.0);
        let power = decide(&power_query(n, source, target).with_method(Method::PowerWeights)).unwrap();
        let mut q = power_query(n, source, target);
        q.source.weight = WeightSpec::two_regime(n, alpha, alpha).unwrap();
        let two = decide(&q.with_method(Method::TwoRegime)).unwrap();
        if power.continuity == two.continuity && power.compactness == two.compactness {
            exact += 1;
        }
    }
    let frac = agree as f64 / tried as f64;
    let secs = started.elapsed().as_secs_f64();
    outcome(
        frac >= AGREEMENT && exact == 50,
        format!(
            "general vs closed form {agree}/{tried} = {:.1}% (>= {:.0}%, margin >= {MARGIN}), alpha=beta two-regime vs power {exact}/50 exact, {secs:.1} s{}",
            100.0 * frac,
            100.0 * AGREEMENT,
            if disagreements.is_empty() { String::new() } else { format!("; first disagreements {}", disagreements.join(", ")) }
        ),
    )
}

// 8. mass ratios against the asymptotic formula
fn mass_asymptotics() -> Outcome {
    const FACTOR: f64 = 2.0;
    let n = 3u32;
    let nf = 3.0;
    let table = AnnulusTable::new(n, 64, 64).unwrap();
    let omega = 4.0 * PI;
    let tuples = [
        (0.0, 2.0, 1.0, 4.0),
        (1.0, 2.0, 0.0, 2.0),
        (-1.0, 1.5, 2.0, 3.0),
        (0.5, 4.0, -1.0, 2.0),
        (2.0, 2.0, 0.0, f64::INFINITY),
        (-2.0, 3.0, 4.0, 6.0),
    ];
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let mut worst: f64 = 1.0;
    let mut worst_exact: f64 = 0.0;
    for (g1, p1, g2, p2) in tuples {
        let w1 = WeightSpec::power(n, g1).unwrap();
        let w2 = WeightSpec::power(n, g2).unwrap();
        // |x| ~ k 2^-mu up to j_k = k pi in dimension 3: constant (omega pi^{n+gamma})^{1/p}
        let c = (omega * PI.powf(nf + g2)).powf(inv(p2)) / (omega * PI.powf(nf + g1)).powf(inv(p1));
        let mu_exp = (nf + g1) * inv(p1) - (nf + g2) * inv(p2);
        let k_exp = g2 * inv(p2) - g1 * inv(p1) + (nf - 1.0) * (inv(p2) - inv(p1));
        for mu in 8..=64u32 {
            for k in 8..=64u32 {
                let idx = FrameIndex { mu, k };
                let got = weighted_mass(&w2, p2, &table, idx).unwrap() / weighted_mass(&w1, p1, &table, idx).unwrap();
                let formula = c * (mu as f64 * mu_exp).exp2() * (k as f64).powf(k_exp);
                let f = (got / formula).max(formula / got);
                worst = worst.max(f);
                // exact shell integrals as a second oracle
                let (a, b) = annulus_bounds(&table, idx).unwrap();
                let shell = |g: f64| omega * (b.powf(nf + g) - a.powf(nf + g)) / (nf + g);
                let exact = shell(g2).powf(inv(p2)) / shell(g1).powf(inv(p1));
                worst_exact = worst_exact.max(rel(got, exact));
            }
        }
    }
    outcome(
        worst < FACTOR && worst_exact < 1e-9,
        format!(
            "6 weight pairs, mu,k in [8,64]: worst factor to the formula {worst:.4} (<{FACTOR}), to exact shell integrals rel {worst_exact:.1e} (<1e-9)"
        ),
    )
}

// 9. Bessel-potential region for n=3, s=1, p=2, c=1
fn bessel_region() -> Outcome {
    let mut ok = true;
    let mut cells = Vec::new();
    for q in [2.0, 3.0, 3.01, 5.0, 7.0, 8.0, 8.01] {
        let d = decide_input(&CheckInput::BesselPotential(BesselPotentialQuery { n: 3, s: 1.0, p: 2.0, q, c: 1.0 })).unwrap();
        let cont = d.continuity == Verdict::HoldsBySufficientCondition;
        let comp = d.compactness == Verdict::HoldsBySufficientCondition;
        ok &= cont == (q > 3.0 && q <= 8.0) && comp == (q > 3.0 && q < 8.0);
        cells.push(format!("q={q}:{}{}", if cont { "C" } else { "-" }, if comp { "K" } else { "-" }));
    }
    outcome(ok, format!("continuous on (3,8], compact on (3,8): {}", cells.join(" ")))
}

// 10. product lemma and A_p classification
fn lemma_suites() -> Outcome {
    let r = match lemma_suite() {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let ap: Vec<_> = r.cases.iter().filter(|c| c.name.starts_with("ap ")).collect();
    let ap_ok = ap.iter().filter(|c| c.passed).count();
    let product: Vec<_> = r.cases.iter().filter(|c| c.name.starts_with("product ")).collect();
    let identical_ok = product
        .iter()
        .filter(|c| c.params["gamma1"] == c.params["gamma2"])
        .all(|c| c.metrics["max_ratio"] == 1.0);
    let max_ratio = product.iter().map(|c| c.metrics["max_ratio"]).fold(0.0f64, f64::max);
    outcome(
        r.passed && ap_ok == ap.len() && identical_ok,
        format!(
            "A_p grid {ap_ok}/{} match -n<gamma<n(p-1); product ratios max {max_ratio:.4} (<4) over {} rows, identical rows exactly 1: {identical_ok}",
            ap.len(),
            product.len()
        ),
    )
}

// 11. supercritical growth and critical boundedness
fn witness_calibration() -> Outcome {
    const SLOPE_TOL: f64 = 0.2;
    let cfg = WitnessConfig::default();
    let run = |q: f64| {
        let input = CheckInput::BesselPotential(BesselPotentialQuery { n: 3, s: 1.0, p: 2.0, q, c: 0.0 });
        witness_suite(&input, WitnessFamily::Dilation, &cfg)
    };
    let (sup, crit) = match (run(8.0), run(6.0)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return outcome(false, format!("{:?} {:?}", a.err(), b.err())),
    };
    let t = &sup.case("trend").unwrap().metrics;
    let slope = t["fitted_slope"];
    let predicted = 0.125;
    let slope_ok = (slope - predicted).abs() <= SLOPE_TOL * predicted && t["monotone"] == 1.0;
    let growth = crit.case("trend").unwrap().metrics["growth"];
    let bounded = growth <= cfg.bounded_growth;
    outcome(
        slope_ok && bounded && sup.passed && crit.passed,
        format!(
            "q=8 fitted slope {slope:.5} vs 1/8 (within {:.0}%), monotone; q=6 growth {growth:.4} (<= {})",
            100.0 * SLOPE_TOL,
            cfg.bounded_growth
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("bessel backbone", bessel_backbone),
        ("partition identities", partition_identities),
        ("frame plancherel", frame_plancherel),
        ("reconstruction", reconstruction),
        ("norm equivalence", norm_equivalence),
        ("p=q collapse", p_equals_q_collapse),
        ("checker consistency", checker_consistency),
        ("mass asymptotics", mass_asymptotics),
        ("bessel-potential region", bessel_region),
        ("lemma suites", lemma_suites),
        ("witness calibration", witness_calibration),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        // written to the raw handle so the lines survive output capture
        let mut err = std::io::stderr().lock();
        let _ = writeln!(
            err,
            "acceptance {:>2} {} {name}: {} [{:.2} s]",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            started.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
