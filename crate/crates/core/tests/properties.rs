use afl_core::annuli::{AnnulusTable, FrameIndex};
use afl_core::embeddings::{decide, EmbeddingQuery, Method, Verdict};
use afl_core::frame::{analyze, CoefficientGrid, Frame, FrameSpec};
use afl_core::seqspace::{b_norm, f_norm, SeqNormParams};
use afl_core::spectral::{RadialProfile, SpaceKind, SpaceParams};
use afl_core::weights::{annulus_weight_integral, weighted_mass, WeightSpec};
use proptest::prelude::*;

const MU_MAX: u32 = 3;
const K_MAX: u32 = 8;
const LEN: usize = (MU_MAX as usize + 1) * K_MAX as usize;

fn grid(values: Vec<f64>) -> CoefficientGrid {
    CoefficientGrid::from_values(3, MU_MAX, K_MAX, values).unwrap()
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(4.0), Just(f64::INFINITY)]
}

fn seq_params() -> impl Strategy<Value = SeqNormParams> {
    (-1.0..2.0f64, exponent(), exponent(), -2.5..3.0f64)
        .prop_map(|(s, p, q, g)| SeqNormParams::new(s, p, q, WeightSpec::power(3, g).unwrap()).unwrap())
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, LEN)
}

type Side = (f64, f64, f64, f64);

/// Valid for `n = 2` and `n = 3`.
fn side() -> impl Strategy<Value = Side> {
    (-1.0..3.0f64, exponent(), exponent(), -1.8..3.0f64)
}

fn finite_exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(4.0)]
}

fn query(n: u32, a: Side, b: Side) -> EmbeddingQuery {
    let space = |(s, p, q, g): Side| SpaceParams::besov(s, p, q, WeightSpec::power(n, g).unwrap()).unwrap();
    EmbeddingQuery::new(space(a), space(b)).unwrap().with_method(Method::PowerWeights)
}

fn holds(v: Verdict) -> bool {
    v == Verdict::HoldsBySufficientCondition
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn sequence_norms_are_norms(a in values(), b in values(), t in -4.0..4.0f64, params in seq_params()) {
        let (ga, gb) = (grid(a.clone()), grid(b.clone()));
        let sum = grid(a.iter().zip(&b).map(|(x, y)| x + y).collect());
        for norm in [b_norm, f_norm] {
            let (na, nb, ns) = (norm(&ga, &params).unwrap(), norm(&gb, &params).unwrap(), norm(&sum, &params).unwrap());
            prop_assert!(ns <= (na + nb) * (1.0 + 1e-12) + 1e-300);
            let scaled = norm(&ga.scaled(t), &params).unwrap();
            prop_assert!((scaled - t.abs() * na).abs() <= 1e-12 * (1.0 + t.abs() * na));
        }
    }

    #[test]
    fn p_equal_q_sequence_norms_coincide(a in values(), s in -1.0..2.0f64, p in exponent(), g in -2.5..3.0f64) {
        let params = SeqNormParams::new(s, p, p, WeightSpec::power(3, g).unwrap()).unwrap();
        let lam = grid(a);
        let (b, f) = (b_norm(&lam, &params).unwrap(), f_norm(&lam, &params).unwrap());
        prop_assert!((b - f).abs() <= 1e-10 * b.max(f).max(1e-300));
    }

    #[test]
    fn lq_nesting(a in values(), s in -1.0..2.0f64, p in exponent(), g in -2.5..3.0f64) {
        // q1 <= q2 => ||.||_{q2} <= ||.||_{q1}
        let lam = grid(a);
        let w = WeightSpec::power(3, g).unwrap();
        let at = |q: f64| b_norm(&lam, &SeqNormParams::new(s, p, q, w.clone()).unwrap()).unwrap();
        let (n1, n2, ninf) = (at(1.0), at(2.0), at(f64::INFINITY));
        prop_assert!(n2 <= n1 * (1.0 + 1e-12) && ninf <= n2 * (1.0 + 1e-12));
    }

    #[test]
    fn csv_round_trip_is_exact(a in values()) {
        let lam = grid(a);
        let mut buf = Vec::new();
        lam.write_csv(&mut buf).unwrap();
        prop_assert_eq!(CoefficientGrid::read_csv(3, buf.as_slice()).unwrap(), lam);
    }

    #[test]
    fn mass_is_monotone_in_p(g in -2.5..3.0f64, mu in 0..=MU_MAX, k in 1..=K_MAX) {
        let table = AnnulusTable::new(3, MU_MAX, K_MAX).unwrap();
        let w = WeightSpec::power(3, g).unwrap();
        let idx = FrameIndex::new(mu, k).unwrap();
        let total = annulus_weight_integral(&w, &table, idx).unwrap();
        let masses: Vec<f64> = [1.0, 1.5, 2.0, 4.0, 8.0]
            .iter()
            .map(|&p| weighted_mass(&w, p, &table, idx).unwrap())
            .collect();
        for pair in masses.windows(2) {
            if total <= 1.0 {
                prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-12));
            } else {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn compact_implies_continuous(n in 2u32..=3, a in side(), b in side()) {
        let d = decide(&query(n, a, b)).unwrap();
        prop_assert!(!holds(d.compactness) || holds(d.continuity));
        prop_assert_eq!(d.exit_code(), d.continuity.exit_code());
    }

    #[test]
    fn power_embeddings_compose(a in side(), b in side(), c in side()) {
        let ab = decide(&query(3, a, b)).unwrap();
        let bc = decide(&query(3, b, c)).unwrap();
        if holds(ab.continuity) && holds(bc.continuity) {
            let ac = decide(&query(3, a, c)).unwrap();
            prop_assert!(holds(ac.continuity), "{:?} -> {:?} -> {:?}", a, b, c);
        }
    }

    #[test]
    fn more_smoothness_never_hurts(a in side(), b in side(), extra in 0.0..2.0f64) {
        let base = decide(&query(3, a, b)).unwrap();
        let smoother = decide(&query(3, (a.0 + extra, a.1, a.2, a.3), b)).unwrap();
        prop_assert!(!holds(base.continuity) || holds(smoother.continuity));
        prop_assert!(!holds(base.compactness) || holds(smoother.compactness) || extra == 0.0);
    }

    #[test]
    fn mixed_kinds_with_smoothness_gap_hold(s in 0.0..3.0f64, gap in 0.01..2.0f64, p in finite_exponent(), q1 in exponent(), q2 in exponent()) {
        let w = WeightSpec::unweighted(3);
        let src = SpaceParams::new(SpaceKind::Besov, s, p, q1, 3, w.clone()).unwrap();
        let tgt = SpaceParams::new(SpaceKind::TriebelLizorkin, s - gap, p, q2, 3, w).unwrap();
        let d = decide(&EmbeddingQuery::new(src, tgt).unwrap()).unwrap();
        prop_assert!(holds(d.continuity));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn analysis_is_linear(s1 in 0.5..2.0f64, s2 in 0.5..2.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let frame = Frame::shared(FrameSpec::new(3, 4, 32)).unwrap();
        let f = RadialProfile::gaussian(3, s1).unwrap();
        let g = RadialProfile::gaussian(3, s2).unwrap();
        let h = RadialProfile::combination(&[(a, &f), (b, &g)]).unwrap();
        let (lf, lg, lh) = (analyze(&f, &frame).unwrap(), analyze(&g, &frame).unwrap(), analyze(&h, &frame).unwrap());
        let scale = lf.max_abs().max(lg.max_abs());
        for ((x, y), z) in lf.values().iter().zip(lg.values()).zip(lh.values()) {
            prop_assert!((a * x + b * y - z).abs() <= 1e-10 * scale);
        }
    }
}
