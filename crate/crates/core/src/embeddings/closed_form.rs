//! Closed-form checks for power weights, two-regime weights, the
//! Bessel-potential embedding and the elementary embeddings.

use super::{Diagnostics, EmbeddingDecision, EmbeddingQuery, Method, Verdict, TIE};
use crate::error::{AflError, Result};
use crate::extended::recip;
use crate::spectral::SpaceKind;
use crate::weights::WeightKind;

fn power_exponent(kind: &WeightKind) -> Option<f64> {
    match kind {
        WeightKind::Power { gamma } => Some(*gamma),
        _ => None,
    }
}

fn regimes(kind: &WeightKind) -> Option<(f64, f64)> {
    match kind {
        WeightKind::Power { gamma } => Some((*gamma, *gamma)),
        WeightKind::TwoRegime { alpha, beta } => Some((*alpha, *beta)),
        WeightKind::Tabulated { .. } => None,
    }
}

fn out_of_scope(method: Method, margin: f64, mut diag: Diagnostics, note: impl Into<String>) -> EmbeddingDecision {
    diag.notes.push(note.into());
    EmbeddingDecision::new(Verdict::OutOfTheoremScope, Verdict::OutOfTheoremScope, margin, method, diag)
}

/// Power weights `|x|^{gamma_1} -> |x|^{gamma_2}` on Besov spaces.
pub fn check_power_weights(query: &EmbeddingQuery) -> Result<EmbeddingDecision> {
    query.validate()?;
    let (a, b) = (&query.source, &query.target);
    let (Some(g1), Some(g2)) = (power_exponent(&a.weight.kind), power_exponent(&b.weight.kind)) else {
        return Err(AflError::invalid("the power-weight check needs power weights on both sides"));
    };
    let e = query.exponents();
    let g = g1 * recip(a.p) - g2 * recip(b.p);
    let mut diag = e.diagnostics();
    diag.weight_gap = Some(g);
    if a.kind != SpaceKind::Besov || b.kind != SpaceKind::Besov {
        return Ok(out_of_scope(Method::PowerWeights, 0.0, diag, "closed form covers Besov spaces only"));
    }
    // k-clause, then mu-clause
    let (slack_k, strict_k) = if e.p_star_infinite() {
        (g - (e.n - 1.0) * e.r, false)
    } else {
        (g - e.n * e.p_star_inv, true)
    };
    let slack_mu = e.delta - g;
    let strict_mu = !e.q_star_infinite();
    let continuity = Verdict::from_slack(slack_k, strict_k).and(Verdict::from_slack(slack_mu, strict_mu));
    let compactness = Verdict::from_slack(slack_k, true).and(Verdict::from_slack(slack_mu, true));
    let margin = slack_k.min(slack_mu);
    diag.compactness_margin = Some(margin);
    Ok(EmbeddingDecision::new(continuity, compactness, margin, Method::PowerWeights, diag))
}

/// Two-regime weights `w_{alpha,beta}` (`|x|^alpha` inside the unit ball,
/// `|x|^beta` outside). With `two_weight = false` the target must be
/// unweighted; power weights enter as `alpha = beta`.
pub fn check_two_regime(query: &EmbeddingQuery, two_weight: bool) -> Result<EmbeddingDecision> {
    query.validate()?;
    let (a, b) = (&query.source, &query.target);
    let method = if two_weight { Method::TwoWeight } else { Method::TwoRegime };
    let (Some((a1, b1)), Some((a2, b2))) = (regimes(&a.weight.kind), regimes(&b.weight.kind)) else {
        return Err(AflError::invalid("the two-regime check needs piecewise power weights"));
    };
    if !two_weight && !b.weight.is_unweighted() {
        return Err(AflError::invalid("the one-weight two-regime check needs an unweighted target"));
    }
    let e = query.exponents();
    let (ip1, ip2) = (recip(a.p), recip(b.p));
    let ga = a1 * ip1 - a2 * ip2;
    let gb = b1 * ip1 - b2 * ip2;
    let mut diag = e.diagnostics();
    diag.weight_gap = Some(ga);
    if a.kind != SpaceKind::Besov || b.kind != SpaceKind::Besov {
        return Ok(out_of_scope(method, 0.0, diag, "closed form covers Besov spaces only"));
    }
    if b.s > a.s + TIE {
        return Ok(out_of_scope(method, a.s - b.s, diag, "needs s2 <= s1"));
    }
    if a.p.is_infinite() {
        return Ok(out_of_scope(method, 0.0, diag, "needs p1 < inf"));
    }
    let (ps_inf, qs_inf) = (e.p_star_infinite(), e.q_star_infinite());
    let k_floor = if ps_inf { (e.n - 1.0) * e.r } else { e.n * e.p_star_inv };
    let slack_beta = gb - k_floor;
    let slack_delta = e.delta - ga.max(k_floor);
    let beta_ok = Verdict::from_slack(slack_beta, !ps_inf);
    let delta_strict = match (qs_inf, ps_inf) {
        (true, true) => false,
        (false, true) => true,
        // equality allowed only away from the tie n/p* = alpha/p1
        (true, false) => (e.n * e.p_star_inv - ga).abs() <= TIE,
        (false, false) => true,
    };
    let continuity = beta_ok.and(Verdict::from_slack(slack_delta, delta_strict));
    let margin = slack_beta.min(slack_delta);
    diag.compactness_margin = Some(margin);
    let compactness = if two_weight && b.p.is_infinite() {
        diag.notes.push("two-weight compactness is stated for p2 < inf".into());
        Verdict::OutOfTheoremScope
    } else {
        Verdict::from_slack(slack_beta, true).and(Verdict::from_slack(slack_delta, true))
    };
    Ok(EmbeddingDecision::new(continuity, compactness, margin, method, diag))
}

/// `H^{s,p}_rad(R^n) -> L^q(R^n, |x|^c)`.
pub fn check_bessel_potential(n: u32, s: f64, p: f64, q: f64, c: f64) -> Result<EmbeddingDecision> {
    if n < 2 || ![s, p, q, c].iter().all(|v| v.is_finite()) {
        return Err(AflError::invalid("Bessel-potential check needs n >= 2 and finite s, p, q, c"));
    }
    let nf = n as f64;
    let method = Method::BesselPotential;
    let mut diag = Diagnostics {
        p_star: f64::INFINITY,
        q_star: f64::INFINITY,
        delta: s - nf / p + nf / q,
        ..Diagnostics::default()
    };
    // hypotheses as (slack, strict, description)
    let hyps = [
        (p - 1.0, true, "1 < p"),
        (s, true, "0 < s"),
        (nf / p - s, true, "s < n/p"),
        (q - p, false, "p <= q"),
        (c + nf, true, "-n < c"),
        (nf * (q - 1.0) - c, true, "c < n(q-1)"),
        (c + s * p, true, "-sp < c"),
        ((nf - 1.0) * (q - p) / p - c, true, "c < (n-1)(q-p)/p"),
    ];
    let mut worst = f64::INFINITY;
    for (slack, strict, what) in hyps {
        worst = worst.min(slack);
        if !Verdict::from_slack(slack, strict).holds() {
            return Ok(out_of_scope(method, slack, diag, format!("hypothesis fails: {what}")));
        }
    }
    let critical = p * (nf + c) / (nf - s * p);
    diag.critical_exponent = Some(critical);
    let slack = critical - q;
    let continuity = Verdict::from_slack(slack, false);
    let compactness = Verdict::from_slack(q - p, true).and(Verdict::from_slack(slack, true));
    diag.compactness_margin = Some(slack.min(q - p));
    Ok(EmbeddingDecision::new(continuity, compactness, slack.min(worst), method, diag))
}

/// Embeddings between spaces that share `p` and the weight: `q` monotonicity,
/// trading smoothness for `q`, and the Besov / Triebel–Lizorkin sandwich.
/// These never give compactness.
pub fn check_elementary(query: &EmbeddingQuery) -> Result<EmbeddingDecision> {
    query.validate()?;
    let (a, b) = (&query.source, &query.target);
    let method = Method::Elementary;
    let diag = query.exponents().diagnostics();
    let same_weight = serde_json::to_value(&a.weight)? == serde_json::to_value(&b.weight)?;
    if a.p != b.p || !same_weight {
        return Ok(out_of_scope(method, 0.0, diag, "needs the same p and the same weight on both sides"));
    }
    let ds = a.s - b.s;
    let (iq1, iq2, ip) = (recip(a.q), recip(b.q), recip(a.p));
    let (continuity, margin) = if ds > TIE {
        // smoothness gap absorbs any change of q; mixed kinds pass through
        // the sandwich at the lower smoothness
        (Verdict::HoldsBySufficientCondition, ds)
    } else if ds < -TIE {
        (Verdict::NotImplied, ds)
    } else {
        // equal smoothness; the slack is measured in 1/q
        let slack = match (a.kind, b.kind) {
            (x, y) if x == y => iq1 - iq2,
            (SpaceKind::Besov, _) => iq1 - ip.max(iq2),
            (_, SpaceKind::Besov) => ip.min(iq1) - iq2,
            _ => unreachable!(),
        };
        (Verdict::from_slack(slack, false), slack)
    };
    let mut diag = diag;
    diag.notes.push("elementary embeddings give no compactness".into());
    Ok(EmbeddingDecision::new(continuity, Verdict::NotImplied, margin, method, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpaceParams;
    use crate::weights::WeightSpec;
    use Verdict::*;

    fn besov(s: f64, p: f64, q: f64, w: WeightSpec) -> SpaceParams {
        SpaceParams::besov(s, p, q, w).unwrap()
    }

    fn pw(g: f64) -> WeightSpec {
        WeightSpec::power(3, g).unwrap()
    }

    fn power_pair(s1: f64, p1: f64, q1: f64, g1: f64, s2: f64, p2: f64, q2: f64, g2: f64) -> EmbeddingDecision {
        let q = EmbeddingQuery::new(besov(s1, p1, q1, pw(g1)), besov(s2, p2, q2, pw(g2))).unwrap();
        check_power_weights(&q).unwrap()
    }

    #[test]
    fn power_weights_threshold_in_s1() {
        // p = q = 2, gamma 0 -> -1: continuous iff s1 >= 1/2, compact iff s1 > 1/2
        let at = power_pair(0.5, 2.0, 2.0, 0.0, 0.0, 2.0, 2.0, -1.0);
        assert_eq!((at.continuity, at.compactness), (HoldsBySufficientCondition, NotImplied));
        let above = power_pair(0.75, 2.0, 2.0, 0.0, 0.0, 2.0, 2.0, -1.0);
        assert_eq!((above.continuity, above.compactness), (HoldsBySufficientCondition, HoldsBySufficientCondition));
        assert!((above.margin - 0.25).abs() < 1e-15);
        let below = power_pair(0.49, 2.0, 2.0, 0.0, 0.0, 2.0, 2.0, -1.0);
        assert_eq!(below.continuity, NotImplied);
    }

    #[test]
    fn power_weights_identity_and_radial_gain() {
        let id = power_pair(1.0, 3.0, 2.0, 1.5, 1.0, 3.0, 2.0, 1.5);
        assert_eq!((id.continuity, id.compactness), (HoldsBySufficientCondition, NotImplied));
        // p1 = 2 -> p2 = 4 with gamma 0 -> 1: continuous iff delta >= -1/4
        for (s1, expect) in [(0.5, HoldsBySufficientCondition), (0.49, NotImplied), (0.8, HoldsBySufficientCondition)] {
            let d = power_pair(s1, 2.0, 2.0, 0.0, 0.0, 4.0, 2.0, 1.0);
            assert_eq!(d.continuity, expect, "s1 = {s1}");
        }
        // negative delta is admissible once the weight gap is negative too
        let neg = power_pair(0.5, 2.0, 2.0, 0.0, 0.0, 4.0, 2.0, 1.0);
        assert!(neg.diagnostics.delta < 0.0 && neg.diagnostics.weight_gap.unwrap() < 0.0);
        assert_eq!(neg.continuity, HoldsBySufficientCondition);
        // with equal weights the gap is 0 and delta = -1/4 falls short
        let flat = power_pair(0.5, 2.0, 2.0, 0.0, 0.0, 4.0, 2.0, 0.0);
        assert_eq!(flat.continuity, NotImplied);
    }

    #[test]
    fn power_weights_reject_other_weights() {
        let q = EmbeddingQuery::new(
            besov(1.0, 2.0, 2.0, WeightSpec::two_regime(3, 1.0, 0.0).unwrap()),
            besov(0.0, 2.0, 2.0, pw(0.0)),
        )
        .unwrap();
        assert!(check_power_weights(&q).is_err());
    }

    #[test]
    fn two_regime_example_point() {
        // p1 = q1 = 2, p2 = q2 = 4, alpha = 2, beta = 1: continuity iff s1 - s2 >= 1.75
        let run = |s1: f64| {
            let q = EmbeddingQuery::new(
                besov(s1, 2.0, 2.0, WeightSpec::two_regime(3, 2.0, 1.0).unwrap()),
                besov(0.0, 4.0, 4.0, WeightSpec::unweighted(3)),
            )
            .unwrap();
            check_two_regime(&q, false).unwrap()
        };
        let at = run(1.75);
        assert_eq!((at.continuity, at.compactness), (HoldsBySufficientCondition, NotImplied));
        assert_eq!(run(1.74).continuity, NotImplied);
        let above = run(1.8);
        assert_eq!(above.compactness, HoldsBySufficientCondition);
    }

    #[test]
    fn two_regime_hypotheses() {
        let q = EmbeddingQuery::new(
            besov(0.0, 2.0, 2.0, WeightSpec::two_regime(3, 2.0, 1.0).unwrap()),
            besov(0.5, 4.0, 4.0, WeightSpec::unweighted(3)),
        )
        .unwrap();
        assert_eq!(check_two_regime(&q, false).unwrap().continuity, OutOfTheoremScope);
        let q = EmbeddingQuery::new(
            besov(2.0, f64::INFINITY, 2.0, WeightSpec::two_regime(3, 2.0, 1.0).unwrap()),
            besov(0.0, f64::INFINITY, 4.0, WeightSpec::unweighted(3)),
        )
        .unwrap();
        assert_eq!(check_two_regime(&q, false).unwrap().continuity, OutOfTheoremScope);
        let weighted_target = EmbeddingQuery::new(
            besov(2.0, 2.0, 2.0, WeightSpec::two_regime(3, 2.0, 1.0).unwrap()),
            besov(0.0, 2.0, 2.0, pw(1.0)),
        )
        .unwrap();
        assert!(check_two_regime(&weighted_target, false).is_err());
        assert!(check_two_regime(&weighted_target, true).is_ok());
    }

    #[test]
    fn two_weight_with_equal_regimes_is_the_power_check() {
        for (g1, g2, s1, p2) in [(1.0, -1.0, 0.6, 2.0), (0.0, 1.0, 0.4, 4.0), (2.0, 0.0, 0.9, 1.5), (1.0, 1.0, 0.2, 3.0)] {
            let q = EmbeddingQuery::new(besov(s1, 2.0, 2.0, pw(g1)), besov(0.0, p2, 3.0, pw(g2))).unwrap();
            let a = check_power_weights(&q).unwrap();
            let b = check_two_regime(&q, true).unwrap();
            assert_eq!((a.continuity, a.compactness), (b.continuity, b.compactness));
        }
    }

    #[test]
    fn bessel_potential_region() {
        let verdicts: Vec<_> = [2.0, 3.0, 3.01, 5.0, 7.0, 8.0, 8.01]
            .iter()
            .map(|&q| {
                let d = check_bessel_potential(3, 1.0, 2.0, q, 1.0).unwrap();
                (d.continuity, d.compactness)
            })
            .collect();
        let h = HoldsBySufficientCondition;
        assert_eq!(
            verdicts,
            vec![
                (OutOfTheoremScope, OutOfTheoremScope),
                (OutOfTheoremScope, OutOfTheoremScope),
                (h, h),
                (h, h),
                (h, h),
                (h, NotImplied),
                (NotImplied, NotImplied),
            ]
        );
        let crit = check_bessel_potential(3, 1.0, 2.0, 6.0, 0.0).unwrap();
        assert_eq!((crit.continuity, crit.compactness), (h, NotImplied));
        assert_eq!(crit.diagnostics.critical_exponent, Some(6.0));
        assert_eq!(check_bessel_potential(3, 1.0, 2.0, 2.0, 0.0).unwrap().continuity, OutOfTheoremScope);
        assert_eq!(check_bessel_potential(3, 2.0, 2.0, 5.0, 0.0).unwrap().continuity, OutOfTheoremScope);
    }

    #[test]
    fn elementary_clauses() {
        let w = pw(1.0);
        let run = |a: SpaceParams, b: SpaceParams| check_elementary(&EmbeddingQuery::new(a, b).unwrap()).unwrap();
        assert_eq!(run(besov(1.0, 2.0, 2.0, w.clone()), besov(1.0, 2.0, 4.0, w.clone())).continuity, HoldsBySufficientCondition);
        assert_eq!(
            run(besov(1.1, 2.0, f64::INFINITY, w.clone()), besov(1.0, 2.0, 1.0, w.clone())).continuity,
            HoldsBySufficientCondition
        );
        assert_eq!(run(besov(1.0, 2.0, 4.0, w.clone()), besov(1.0, 2.0, 2.0, w.clone())).continuity, NotImplied);
        let f = |q: f64| SpaceParams::triebel_lizorkin(1.0, 3.0, q, w.clone()).unwrap();
        // B_{p,min(p,q)} -> F_{p,q} -> B_{p,max(p,q)} with p = 3
        assert!(run(besov(1.0, 3.0, 2.0, w.clone()), f(2.0)).continuity.holds());
        assert!(!run(besov(1.0, 3.0, 4.0, w.clone()), f(5.0)).continuity.holds());
        assert!(run(f(2.0), besov(1.0, 3.0, 3.0, w.clone())).continuity.holds());
        assert!(!run(f(4.0), besov(1.0, 3.0, 3.0, w.clone())).continuity.holds());
        let other_p = run(besov(1.0, 2.0, 2.0, w.clone()), besov(1.0, 3.0, 2.0, w.clone()));
        assert_eq!(other_p.continuity, OutOfTheoremScope);
        let d = run(besov(1.0, 2.0, 2.0, w.clone()), besov(1.0, 2.0, 2.0, w));
        assert_eq!(d.compactness, NotImplied);
    }
}
