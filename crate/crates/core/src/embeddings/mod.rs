//! Sufficient conditions for continuous and compact embeddings between
//! weighted radial Besov and Triebel–Lizorkin spaces.
//!
//! Every verdict is one-sided: [`Verdict::NotImplied`] means the condition
//! in use does not give the embedding, never that the embedding fails.

mod closed_form;
mod general;

use serde::{Deserialize, Serialize};

use crate::error::{AflError, Result};
use crate::extended;
use crate::spectral::{SpaceKind, SpaceParams};
use crate::weights::WeightKind;

pub use closed_form::{check_bessel_potential, check_elementary, check_power_weights, check_two_regime};
pub use general::{check_besov_general, check_tl_general};

/// Slack below which a parameter inequality counts as an equality.
pub(crate) const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HoldsBySufficientCondition,
    NotImplied,
    OutOfTheoremScope,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::HoldsBySufficientCondition
    }

    /// CLI exit status: 0, 10 or 11.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::HoldsBySufficientCondition => 0,
            Verdict::NotImplied => 10,
            Verdict::OutOfTheoremScope => 11,
        }
    }

    pub(crate) fn from_slack(slack: f64, strict: bool) -> Self {
        let ok = if strict { slack > TIE } else { slack >= -TIE };
        if ok {
            Verdict::HoldsBySufficientCondition
        } else {
            Verdict::NotImplied
        }
    }

    /// Worst of two verdicts: `NotImplied` beats `OutOfTheoremScope` beats
    /// `Holds`.
    pub(crate) fn and(self, other: Self) -> Self {
        use Verdict::*;
        match (self, other) {
            (NotImplied, _) | (_, NotImplied) => NotImplied,
            (OutOfTheoremScope, _) | (_, OutOfTheoremScope) => OutOfTheoremScope,
            _ => HoldsBySufficientCondition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    BesovGeneral,
    PowerWeights,
    TwoRegime,
    TwoWeight,
    TlGeneral,
    BesselPotential,
    Elementary,
}

/// Truncation and classification settings of the numeric checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericConfig {
    pub mu_max: u32,
    pub k_max: u32,
    /// Slopes in `k` are fitted on `[k_window * K, K]`.
    pub k_window: f64,
    /// Fitted exponents closer than this to their threshold are inconclusive.
    pub eps_margin: f64,
    /// The `k` fit starts only once the annuli lie this many feature radii out.
    pub feature_reach: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            mu_max: 16,
            k_max: 256,
            k_window: 0.25,
            eps_margin: 0.05,
            feature_reach: 64.0,
        }
    }
}

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_max < 4 || self.k_max < 16 {
            return Err(AflError::invalid("numeric checks need mu_max >= 4 and k_max >= 16"));
        }
        if !(self.k_window > 0.0 && self.k_window < 1.0) {
            return Err(AflError::invalid("k_window must lie in (0, 1)"));
        }
        if !(self.eps_margin > 0.0 && self.eps_margin.is_finite() && self.feature_reach >= 1.0) {
            return Err(AflError::invalid("eps_margin must be positive and feature_reach >= 1"));
        }
        Ok(())
    }
}

/// `source -> target`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingQuery {
    pub source: SpaceParams,
    pub target: SpaceParams,
    #[serde(default)]
    pub config: NumericConfig,
    #[serde(default)]
    pub method: Method,
}

impl EmbeddingQuery {
    pub fn new(source: SpaceParams, target: SpaceParams) -> Result<Self> {
        let q = Self {
            source,
            target,
            config: NumericConfig::default(),
            method: Method::Auto,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_config(mut self, config: NumericConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn n(&self) -> u32 {
        self.source.n
    }

    /// Fills weight dimensions and checks both sides.
    pub fn normalized(self) -> Result<Self> {
        let q = Self {
            source: self.source.normalized()?,
            target: self.target.normalized()?,
            ..self
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.target.validate()?;
        if self.source.n != self.target.n {
            return Err(AflError::invalid("source and target dimensions differ"));
        }
        self.config.validate()
    }

    pub(crate) fn exponents(&self) -> Exponents {
        Exponents::of(&self.source, &self.target)
    }
}

/// `H^{s,p}_rad -> L^q(|x|^c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesselPotentialQuery {
    pub n: u32,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
}

impl BesselPotentialQuery {
    /// The same embedding as `RF^s_{p,2} -> RF^0_{q,2}(|x|^c)`.
    pub fn as_embedding(&self) -> Result<EmbeddingQuery> {
        use crate::weights::WeightSpec;
        let source = SpaceParams::triebel_lizorkin(self.s, self.p, 2.0, WeightSpec::unweighted(self.n))?;
        let target = SpaceParams::triebel_lizorkin(0.0, self.q, 2.0, WeightSpec::power(self.n, self.c)?)?;
        EmbeddingQuery::new(source, target)
    }
}

/// Either query shape, as read by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckInput {
    Embedding(EmbeddingQuery),
    BesselPotential(BesselPotentialQuery),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(with = "extended")]
    pub p_star: f64,
    #[serde(with = "extended")]
    pub q_star: f64,
    pub delta: f64,
    /// `gamma_1/p_1 - gamma_2/p_2` for piecewise power weights (inner
    /// exponents).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_gap: Option<f64>,
    /// Worst fitted exponent of `w2_{mu k}/w1_{mu k}` in `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_exponent: Option<f64>,
    /// Fitted slope of `log2 a_mu` in `mu`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_slope: Option<f64>,
    /// Per-scale `k` exponents.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k_exponents: Vec<f64>,
    /// `log2 a_mu` per scale; `None` where the inner sum diverges.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub log2_scale_terms: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compactness_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingDecision {
    pub continuity: Verdict,
    pub compactness: Verdict,
    /// Slack of the binding continuity inequality; negative when it fails.
    pub margin: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl EmbeddingDecision {
    /// Enforces compact => continuous and finite margins.
    pub(crate) fn new(continuity: Verdict, compactness: Verdict, margin: f64, method: Method, diagnostics: Diagnostics) -> Self {
        let compactness = if continuity.holds() { compactness } else { continuity };
        let finite = |m: f64| if m.is_finite() { m } else { m.signum() * f64::MAX };
        let mut diagnostics = diagnostics;
        diagnostics.compactness_margin = diagnostics.compactness_margin.map(finite);
        Self {
            continuity,
            compactness,
            margin: finite(margin),
            method,
            diagnostics,
        }
    }

    /// Exit status of the CLI: the continuity verdict.
    pub fn exit_code(&self) -> i32 {
        self.continuity.exit_code()
    }
}

/// `1/p*`, `1/q*`, `delta` and `1/p_2 - 1/p_1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Exponents {
    pub n: f64,
    pub r: f64,
    pub p_star_inv: f64,
    pub q_star_inv: f64,
    pub delta: f64,
}

impl Exponents {
    pub fn of(a: &SpaceParams, b: &SpaceParams) -> Self {
        let n = a.n as f64;
        let (ip1, ip2) = (extended::recip(a.p), extended::recip(b.p));
        let r = ip2 - ip1;
        Self {
            n,
            r,
            p_star_inv: r.max(0.0),
            q_star_inv: (extended::recip(b.q) - extended::recip(a.q)).max(0.0),
            delta: a.s - n * ip1 - b.s + n * ip2,
        }
    }

    pub fn p_star_infinite(&self) -> bool {
        self.p_star_inv == 0.0
    }

    pub fn q_star_infinite(&self) -> bool {
        self.q_star_inv == 0.0
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let inv = |x: f64| if x == 0.0 { f64::INFINITY } else { 1.0 / x };
        Diagnostics {
            p_star: inv(self.p_star_inv),
            q_star: inv(self.q_star_inv),
            delta: self.delta,
            ..Diagnostics::default()
        }
    }
}

fn piecewise_power(kind: &WeightKind) -> Option<(f64, f64)> {
    match kind {
        WeightKind::Power { gamma } => Some((*gamma, *gamma)),
        WeightKind::TwoRegime { alpha, beta } => Some((*alpha, *beta)),
        WeightKind::Tabulated { .. } => None,
    }
}

/// Picks the most specific applicable check.
///
/// Mixed Besov / Triebel–Lizorkin pairs go to the elementary embeddings,
/// Triebel–Lizorkin pairs to the general radial-weight condition. Besov pairs
/// use the closed forms when both weights are piecewise powers and their
/// hypotheses hold, and the numeric general condition otherwise.
pub fn decide(query: &EmbeddingQuery) -> Result<EmbeddingDecision> {
    query.validate()?;
    match query.method {
        Method::Auto => {}
        Method::BesovGeneral => return check_besov_general(query),
        Method::PowerWeights => return check_power_weights(query),
        Method::TwoRegime => return check_two_regime(query, false),
        Method::TwoWeight => return check_two_regime(query, true),
        Method::TlGeneral => return check_tl_general(query),
        Method::Elementary => return check_elementary(query),
        Method::BesselPotential => {
            return Err(AflError::invalid(
                "the Bessel-potential check takes {n, s, p, q, c}, not a space pair",
            ))
        }
    }
    let (a, b) = (&query.source, &query.target);
    match (a.kind, b.kind) {
        (SpaceKind::Besov, SpaceKind::Besov) => {}
        (SpaceKind::TriebelLizorkin, SpaceKind::TriebelLizorkin) => return check_tl_general(query),
        _ => return check_elementary(query),
    }
    let (Some(w1), Some(w2)) = (piecewise_power(&a.weight.kind), piecewise_power(&b.weight.kind)) else {
        return check_besov_general(query);
    };
    if w1.0 == w1.1 && w2.0 == w2.1 {
        return check_power_weights(query);
    }
    let in_scope = b.s <= a.s + TIE && a.p.is_finite();
    match (in_scope, b.weight.is_unweighted()) {
        (true, true) => check_two_regime(query, false),
        (true, false) => check_two_regime(query, true),
        (false, _) => check_besov_general(query),
    }
}

/// Runs either query shape.
pub fn decide_input(input: &CheckInput) -> Result<EmbeddingDecision> {
    match input {
        CheckInput::Embedding(q) => decide(&q.clone().normalized()?),
        CheckInput::BesselPotential(b) => check_bessel_potential(b.n, b.s, b.p, b.q, b.c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSpec;

    #[test]
    fn verdict_algebra_and_codes() {
        use Verdict::*;
        assert_eq!(HoldsBySufficientCondition.and(OutOfTheoremScope), OutOfTheoremScope);
        assert_eq!(OutOfTheoremScope.and(NotImplied), NotImplied);
        assert_eq!(
            [HoldsBySufficientCondition, NotImplied, OutOfTheoremScope].map(Verdict::exit_code),
            [0, 10, 11]
        );
        assert!(Verdict::from_slack(0.0, false).holds());
        assert!(!Verdict::from_slack(0.0, true).holds());
    }

    #[test]
    fn compactness_never_exceeds_continuity() {
        let d = EmbeddingDecision::new(
            Verdict::NotImplied,
            Verdict::HoldsBySufficientCondition,
            f64::NEG_INFINITY,
            Method::PowerWeights,
            Diagnostics::default(),
        );
        assert_eq!(d.compactness, Verdict::NotImplied);
        assert!(d.margin.is_finite());
    }

    #[test]
    fn query_json_round_trip_and_untagged_input() {
        let w = WeightSpec::power(3, 1.0).unwrap();
        let a = SpaceParams::besov(1.0, 2.0, f64::INFINITY, w.clone()).unwrap();
        let b = SpaceParams::besov(0.0, 4.0, 2.0, w).unwrap();
        let q = EmbeddingQuery::new(a, b).unwrap();
        let text = serde_json::to_string(&q).unwrap();
        assert!(text.contains("\"inf\""));
        let back: CheckInput = serde_json::from_str(&text).unwrap();
        assert!(matches!(back, CheckInput::Embedding(_)));
        let bp: CheckInput = serde_json::from_str(r#"{"n":3,"s":1,"p":2,"q":7,"c":1}"#).unwrap();
        assert!(matches!(bp, CheckInput::BesselPotential(_)));
        let minimal: EmbeddingQuery = serde_json::from_str(
            r#"{"source":{"kind":"b","s":1,"p":2,"q":2,"n":3,"weight":{"variant":"power","gamma":0}},
                "target":{"kind":"b","s":0,"p":2,"q":2,"n":3,"weight":{"variant":"power","gamma":0}}}"#,
        )
        .unwrap();
        let minimal = minimal.normalized().unwrap();
        assert_eq!(minimal.config, NumericConfig::default());
        assert!(decide(&minimal).unwrap().continuity.holds());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = SpaceParams::besov(1.0, 2.0, 2.0, WeightSpec::unweighted(3)).unwrap();
        let b = SpaceParams::besov(0.0, 2.0, 2.0, WeightSpec::unweighted(2)).unwrap();
        assert!(EmbeddingQuery::new(a, b).is_err());
    }
}
