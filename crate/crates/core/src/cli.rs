//! `afl` command line: zero tables, norms, analysis/synthesis, embedding checks
//! and verification suites.
//!
//! Exit codes: 0 success or a holding verdict, 1 failed verification suite,
//! 2 error, 10 not implied, 11 out of theorem scope, 64 usage error.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::embeddings::{
    decide_input, BesselPotentialQuery, CheckInput, EmbeddingQuery, Method, NumericConfig,
};
use crate::error::{AflError, Result};
use crate::extended;
use crate::frame::{analyze, reconstruction_error, synthesize, CoefficientGrid, Frame, FrameSpec};
use crate::harness::{
    lemma_suite, norm_equivalence_suite, witness_suite, NormEquivalenceConfig, SuiteReport, WitnessConfig,
    WitnessFamily,
};
use crate::special::{cache_dir, cached_bessel_zeros};
use crate::spectral::{
    besov_norm, build_filter_bank, default_freq_grid, tl_norm, BankVariant, RadialProfile, SpaceKind,
    SpaceParams,
};
use crate::weights::WeightSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const COEFFICIENTS_SCHEMA: &str = "afl-coefficients/1";

const BANK_POINTS_PER_OCTAVE: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "afl", version, about = "Radial annulus-frame toolkit for weighted Besov and Triebel-Lizorkin spaces")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Zero-table cache directory (overrides AFL_CACHE_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Progress and timing on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Positive zeros j_{nu,1..K} of J_nu (cached on disk).
    Zeros {
        #[arg(allow_negative_numbers = true)]
        nu: f64,
        count: usize,
    },
    /// Truncated Besov or Triebel-Lizorkin norm of a profile.
    Norm(NormArgs),
    /// Frame coefficients of a profile, as CSV (or a JSON envelope with --json).
    Analyze(AnalyzeArgs),
    /// Synthesizes a coefficient grid and reports the reconstruction.
    Synthesize(SynthesizeArgs),
    /// Decides an embedding query.
    Check(CheckArgs),
    /// Runs a verification suite and writes its report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(alias = "besov")]
    B,
    #[value(alias = "tl")]
    F,
}

impl From<KindArg> for SpaceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::B => SpaceKind::Besov,
            KindArg::F => SpaceKind::TriebelLizorkin,
        }
    }
}

fn exponent(text: &str) -> std::result::Result<f64, String> {
    extended::parse(text)
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Profile JSON file ("-" for stdin).
    #[arg(long)]
    pub profile: PathBuf,
    /// Space parameters as a JSON file; excludes the inline flags.
    #[arg(long, conflicts_with_all = ["kind", "s", "p", "q", "gamma", "weight"])]
    pub space: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "b")]
    pub kind: KindArg,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub p: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub q: Option<f64>,
    /// Power weight |x|^gamma.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "weight")]
    pub gamma: Option<f64>,
    /// Weight as inline JSON.
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub mu_max: u32,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Profile JSON file ("-" for stdin).
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = crate::frame::DEFAULT_MU_MAX)]
    pub mu_max: u32,
    #[arg(long, default_value_t = crate::frame::DEFAULT_K_MAX)]
    pub k_max: u32,
    /// Output file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Coefficient CSV or JSON envelope (default stdin).
    #[arg(long, default_value = "-")]
    pub coefficients: PathBuf,
    /// Dimension for a bare CSV without a header.
    #[arg(long)]
    pub n: Option<u32>,
    /// Reference profile for the error; defaults to the one recorded by `analyze`.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Writes the synthesized profile as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Query JSON file ("-" for stdin); excludes the inline flags.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Inline Bessel-potential query H^{s,p} -> L^q(|x|^c).
    #[arg(long)]
    pub bessel: bool,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub source: SourceSide,
    #[command(flatten)]
    pub target: TargetSide,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub mu_max: Option<u32>,
    #[arg(long)]
    pub k_max: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SourceSide {
    #[arg(long, value_enum)]
    pub kind1: Option<KindArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub s1: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub p1: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub q1: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "weight1")]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub weight1: Option<String>,
}

#[derive(Debug, Args)]
pub struct TargetSide {
    #[arg(long, value_enum)]
    pub kind2: Option<KindArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub s2: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub p2: Option<f64>,
    #[arg(long, value_parser = exponent)]
    pub q2: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "weight2")]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub weight2: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    BesovGeneral,
    PowerWeights,
    TwoRegime,
    TwoWeight,
    TlGeneral,
    Elementary,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::BesovGeneral => Method::BesovGeneral,
            MethodArg::PowerWeights => Method::PowerWeights,
            MethodArg::TwoRegime => Method::TwoRegime,
            MethodArg::TwoWeight => Method::TwoWeight,
            MethodArg::TlGeneral => Method::TlGeneral,
            MethodArg::Elementary => Method::Elementary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    NormEquivalence,
    Witness,
    Lemma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Dilation,
    RadialTranslation,
    Modulation,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    /// Report directory.
    #[arg(long, default_value = "afl-reports")]
    pub out: PathBuf,
    /// Witness query JSON; defaults to H^{1,2} -> L^8 on R^3.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dilation")]
    pub family: FamilyArg,
}

/// Flag combinations clap cannot express.
#[derive(Debug)]
struct Usage(String);

enum Failure {
    Usage(Usage),
    Error(AflError),
}

impl From<AflError> for Failure {
    fn from(e: AflError) -> Self {
        Failure::Error(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    json: bool,
    verbose: u8,
}

impl Io<'_> {
    fn log(&mut self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            let _ = writeln!(self.stderr, "afl: {}", msg.as_ref());
        }
    }

    fn read_input(&mut self, path: &Path) -> Result<String> {
        if path.as_os_str() == "-" {
            let mut s = String::new();
            self.stdin.read_to_string(&mut s)?;
            Ok(s)
        } else {
            Ok(std::fs::read_to_string(path)?)
        }
    }

    fn emit_json(&mut self, value: &serde_json::Value) -> Result<()> {
        serde_json::to_writer_pretty(&mut *self.stdout, value)?;
        writeln!(self.stdout)?;
        Ok(())
    }
}

/// Runs the CLI on the process streams and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit streams.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    if let Some(dir) = &cli.cache_dir {
        std::env::set_var("AFL_CACHE_DIR", dir);
    }
    let mut io = Io {
        stdin,
        stdout,
        stderr,
        json: cli.json,
        verbose: cli.verbose,
    };
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Zeros { nu, count } => cmd_zeros(&mut io, *nu, *count),
        Command::Norm(a) => cmd_norm(&mut io, a),
        Command::Analyze(a) => cmd_analyze(&mut io, a),
        Command::Synthesize(a) => cmd_synthesize(&mut io, a),
        Command::Check(a) => cmd_check(&mut io, a),
        Command::Verify(a) => cmd_verify(&mut io, a),
    };
    io.log(format!("finished in {:.3} s", started.elapsed().as_secs_f64()));
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(Usage(msg))) => {
            let _ = writeln!(io.stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Error(e)) => {
            if io.json {
                let _ = io.emit_json(&json!({"error": e.to_string()}));
            }
            let _ = writeln!(io.stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn cmd_zeros(io: &mut Io, nu: f64, count: usize) -> CmdResult {
    if count == 0 {
        return Err(Usage("count must be positive".into()).into());
    }
    io.log(format!("cache directory {}", cache_dir().display()));
    let table = cached_bessel_zeros(nu, count)?;
    if io.json {
        io.emit_json(&json!({
            "schema": "afl-zeros/1",
            "nu": nu,
            "count": count,
            "zeros": table.zeros(),
        }))?;
    } else {
        for (k, z) in table.zeros().iter().enumerate() {
            writeln!(io.stdout, "{}\t{z:?}", k + 1)?;
        }
    }
    Ok(EXIT_OK)
}

fn parse_weight(json_text: Option<&str>, gamma: Option<f64>, n: u32) -> std::result::Result<WeightSpec, Failure> {
    match (json_text, gamma) {
        (Some(t), _) => {
            let w: WeightSpec = serde_json::from_str(t).map_err(|e| Usage(format!("bad weight JSON: {e}")))?;
            Ok(w.with_dimension(n)?)
        }
        (None, Some(g)) => Ok(WeightSpec::power(n, g)?),
        (None, None) => Ok(WeightSpec::unweighted(n)),
    }
}

fn load_profile(io: &mut Io, path: &Path) -> Result<RadialProfile> {
    RadialProfile::from_json(&io.read_input(path)?)
}

fn cmd_norm(io: &mut Io, a: &NormArgs) -> CmdResult {
    let f = load_profile(io, &a.profile)?;
    let params = match &a.space {
        Some(path) => {
            let text = io.read_input(path)?;
            let mut sp: SpaceParams = serde_json::from_str(&text)?;
            if sp.n == 0 {
                sp.n = f.n;
            }
            sp.normalized()?
        }
        None => {
            let (Some(s), Some(p), Some(q)) = (a.s, a.p, a.q) else {
                return Err(Usage("norm needs --space or all of --s, --p, --q".into()).into());
            };
            let w = parse_weight(a.weight.as_deref(), a.gamma, f.n)?;
            SpaceParams::new(a.kind.into(), s, p, q, f.n, w)?
        }
    };
    let bank = build_filter_bank(
        BankVariant::Lp,
        f.n,
        a.mu_max,
        &default_freq_grid(a.mu_max, BANK_POINTS_PER_OCTAVE),
    )?;
    let result = match params.kind {
        SpaceKind::Besov => besov_norm(&f, &params, &bank)?,
        SpaceKind::TriebelLizorkin => tl_norm(&f, &params, &bank)?,
    };
    if io.json {
        io.emit_json(&json!({"schema": "afl-norm/1", "space": params, "result": result}))?;
    } else {
        writeln!(io.stdout, "norm\t{:?}", result.value)?;
        writeln!(io.stdout, "tail_estimate\t{:?}", result.tail_estimate)?;
        writeln!(io.stdout, "mu_max\t{}", result.mu_max)?;
        if result.truncated_sup {
            writeln!(io.stdout, "truncated_sup\ttrue")?;
        }
    }
    Ok(EXIT_OK)
}

/// JSON form of an analysis: the frame, the analyzed profile and its coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientEnvelope {
    pub schema: String,
    pub frame: FrameSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<RadialProfile>,
    pub coefficients: CoefficientGrid,
}

fn cmd_analyze(io: &mut Io, a: &AnalyzeArgs) -> CmdResult {
    let f = load_profile(io, &a.profile)?;
    let spec = FrameSpec::new(f.n, a.mu_max, a.k_max);
    io.log(format!("building frame {spec:?}"));
    let frame = Frame::shared(spec)?;
    let lam = analyze(&f, &frame)?;
    let mut buf = Vec::new();
    if io.json {
        let env = CoefficientEnvelope {
            schema: COEFFICIENTS_SCHEMA.into(),
            frame: spec,
            source: Some(f),
            coefficients: lam,
        };
        serde_json::to_writer_pretty(&mut buf, &env)?;
        buf.push(b'\n');
    } else {
        writeln!(buf, "# schema: {COEFFICIENTS_SCHEMA}")?;
        writeln!(buf, "# n: {}", spec.n)?;
        writeln!(buf, "# source: {}", serde_json::to_string(&f)?)?;
        lam.write_csv(&mut buf)?;
    }
    match &a.out {
        Some(path) => std::fs::write(path, buf)?,
        None => io.stdout.write_all(&buf)?,
    }
    Ok(EXIT_OK)
}

/// Parses CSV with `# key: value` header lines, or a JSON envelope.
fn parse_coefficients(text: &str, n_flag: Option<u32>) -> std::result::Result<CoefficientEnvelope, Failure> {
    if text.trim_start().starts_with('{') {
        let env: CoefficientEnvelope = serde_json::from_str(text)?;
        if env.schema != COEFFICIENTS_SCHEMA {
            return Err(AflError::invalid(format!("unknown coefficient schema {:?}", env.schema)).into());
        }
        env.coefficients.validate()?;
        return Ok(env);
    }
    let mut n_header = None;
    let mut source = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((key, value)) = rest.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "schema" if value != COEFFICIENTS_SCHEMA => {
                        return Err(AflError::invalid(format!("unknown coefficient schema {value:?}")).into())
                    }
                    "n" => {
                        n_header =
                            Some(value.parse::<u32>().map_err(|_| AflError::invalid(format!("bad n header {value:?}")))?)
                    }
                    "source" => source = Some(RadialProfile::from_json(value)?),
                    _ => {}
                }
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let n = match (n_flag, n_header) {
        (Some(a), Some(b)) if a != b => {
            return Err(Usage(format!("--n {a} contradicts the recorded dimension {b}")).into())
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(Usage("bare coefficient CSV needs --n".into()).into()),
    };
    let grid = CoefficientGrid::read_csv(n, body.as_bytes())?;
    Ok(CoefficientEnvelope {
        schema: COEFFICIENTS_SCHEMA.into(),
        frame: FrameSpec::new(grid.n, grid.mu_max, grid.k_max),
        source,
        coefficients: grid,
    })
}

fn cmd_synthesize(io: &mut Io, a: &SynthesizeArgs) -> CmdResult {
    let text = io.read_input(&a.coefficients)?;
    let env = parse_coefficients(&text, a.n)?;
    let reference = match &a.profile {
        Some(p) => Some(load_profile(io, p)?),
        None => env.source.clone(),
    };
    let frame = Frame::shared_for(&env.coefficients)?;
    let out = synthesize(&env.coefficients, &frame)?;
    let l2 = frame.synthesized_l2(&env.coefficients);
    let rel_error = match &reference {
        Some(f) => Some(reconstruction_error(f, &env.coefficients, &frame)?),
        None => None,
    };
    if let Some(path) = &a.out {
        std::fs::write(path, out.to_json()?)?;
    }
    if io.json {
        io.emit_json(&json!({
            "schema": "afl-synthesis/1",
            "frame": frame.spec(),
            "l2_norm": l2,
            "reference_l2_norm": reference.as_ref().map(|f| f.l2_norm()),
            "rel_error": rel_error,
        }))?;
    } else {
        writeln!(io.stdout, "l2_norm\t{l2:?}")?;
        if let Some(e) = rel_error {
            writeln!(io.stdout, "rel_error\t{e:?}")?;
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn inline_space(
    kind: Option<KindArg>,
    s: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    weight: Option<&str>,
    gamma: Option<f64>,
    n: u32,
    side: &str,
) -> std::result::Result<SpaceParams, Failure> {
    let (Some(s), Some(p), Some(q)) = (s, p, q) else {
        return Err(Usage(format!("inline query needs --s{side}, --p{side} and --q{side}")).into());
    };
    let w = parse_weight(weight, gamma, n)?;
    Ok(SpaceParams::new(kind.unwrap_or(KindArg::B).into(), s, p, q, n, w)?)
}

fn check_input(io: &mut Io, a: &CheckArgs) -> std::result::Result<CheckInput, Failure> {
    let bessel_flags = a.s.is_some() || a.p.is_some() || a.q.is_some() || a.c.is_some();
    let src = &a.source;
    let tgt = &a.target;
    let side_flags = src.kind1.is_some()
        || src.s1.is_some()
        || src.p1.is_some()
        || src.q1.is_some()
        || src.gamma1.is_some()
        || src.weight1.is_some()
        || tgt.kind2.is_some()
        || tgt.s2.is_some()
        || tgt.p2.is_some()
        || tgt.q2.is_some()
        || tgt.gamma2.is_some()
        || tgt.weight2.is_some();
    let overrides = a.method.is_some() || a.mu_max.is_some() || a.k_max.is_some();
    if let Some(path) = &a.file {
        if a.bessel || bessel_flags || side_flags || a.n.is_some() {
            return Err(Usage("--file excludes the inline query flags".into()).into());
        }
        let mut input: CheckInput = serde_json::from_str(&io.read_input(path)?)?;
        if let CheckInput::Embedding(q) = &mut input {
            apply_overrides(q, a);
        } else if overrides {
            return Err(Usage("--method, --mu-max and --k-max apply to embedding queries only".into()).into());
        }
        return Ok(input);
    }
    if a.bessel {
        if side_flags || overrides {
            return Err(Usage("--bessel takes only --n, --s, --p, --q and --c".into()).into());
        }
        let (Some(n), Some(s), Some(p), Some(q), Some(c)) = (a.n, a.s, a.p, a.q, a.c) else {
            return Err(Usage("--bessel needs --n, --s, --p, --q and --c".into()).into());
        };
        return Ok(CheckInput::BesselPotential(BesselPotentialQuery { n, s, p, q, c }));
    }
    if bessel_flags {
        return Err(Usage("--s, --p, --q and --c require --bessel".into()).into());
    }
    if !side_flags {
        return Err(Usage("check needs --file, --bessel, or the inline --s1/--p1/--q1 --s2/--p2/--q2 flags".into()).into());
    }
    let n = a.n.ok_or_else(|| Usage("inline query needs --n".into()))?;
    let source = inline_space(src.kind1, src.s1, src.p1, src.q1, src.weight1.as_deref(), src.gamma1, n, "1")?;
    let target = inline_space(tgt.kind2, tgt.s2, tgt.p2, tgt.q2, tgt.weight2.as_deref(), tgt.gamma2, n, "2")?;
    let mut q = EmbeddingQuery::new(source, target)?;
    apply_overrides(&mut q, a);
    Ok(CheckInput::Embedding(q))
}

fn apply_overrides(q: &mut EmbeddingQuery, a: &CheckArgs) {
    if let Some(m) = a.method {
        q.method = m.into();
    }
    let mut cfg: NumericConfig = q.config;
    if let Some(m) = a.mu_max {
        cfg.mu_max = m;
    }
    if let Some(k) = a.k_max {
        cfg.k_max = k;
    }
    q.config = cfg;
}

fn cmd_check(io: &mut Io, a: &CheckArgs) -> CmdResult {
    let input = check_input(io, a)?;
    let decision = decide_input(&input)?;
    if io.json {
        io.emit_json(&json!({"schema": "afl-decision/1", "input": input, "decision": decision}))?;
    } else {
        let label = |v: crate::embeddings::Verdict| serde_json::to_value(v).map(|s| s.as_str().unwrap_or("").to_string());
        writeln!(io.stdout, "continuity\t{}", label(decision.continuity)?)?;
        writeln!(io.stdout, "compactness\t{}", label(decision.compactness)?)?;
        writeln!(io.stdout, "method\t{}", serde_json::to_value(decision.method)?.as_str().unwrap_or(""))?;
        writeln!(io.stdout, "margin\t{:?}", decision.margin)?;
        for note in &decision.diagnostics.notes {
            writeln!(io.stdout, "note\t{note}")?;
        }
    }
    Ok(decision.exit_code())
}

fn cmd_verify(io: &mut Io, a: &VerifyArgs) -> CmdResult {
    if a.file.is_some() && a.suite != SuiteArg::Witness {
        return Err(Usage("--file applies to the witness suite only".into()).into());
    }
    io.log(format!("running suite {:?}", a.suite));
    let report: SuiteReport = match a.suite {
        SuiteArg::NormEquivalence => norm_equivalence_suite(&NormEquivalenceConfig::default())?,
        SuiteArg::Lemma => lemma_suite()?,
        SuiteArg::Witness => {
            let input = match &a.file {
                Some(p) => serde_json::from_str(&io.read_input(p)?)?,
                None => CheckInput::BesselPotential(BesselPotentialQuery {
                    n: 3,
                    s: 1.0,
                    p: 2.0,
                    q: 8.0,
                    c: 0.0,
                }),
            };
            let family = match a.family {
                FamilyArg::Dilation => WitnessFamily::Dilation,
                FamilyArg::RadialTranslation => WitnessFamily::RadialTranslation,
                FamilyArg::Modulation => WitnessFamily::Modulation,
            };
            witness_suite(&input, family, &WitnessConfig::default())?
        }
    };
    let (json_path, csv_path) = report.persist(&a.out)?;
    let failures: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    if io.json {
        io.emit_json(&json!({
            "schema": "afl-verify/1",
            "suite": report.suite,
            "passed": report.passed,
            "cases": report.cases.len(),
            "failures": failures,
            "runtime_seconds": report.runtime_seconds,
            "report": json_path,
            "table": csv_path,
        }))?;
    } else {
        writeln!(
            io.stdout,
            "{}\t{}\t{} cases\t{:.2} s",
            report.suite,
            if report.passed { "passed" } else { "FAILED" },
            report.cases.len(),
            report.runtime_seconds
        )?;
        for name in &failures {
            writeln!(io.stdout, "failed\t{name}")?;
        }
        writeln!(io.stdout, "report\t{}", json_path.display())?;
        writeln!(io.stdout, "table\t{}", csv_path.display())?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_SUITE_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut input = stdin.as_bytes();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("afl").chain(args.iter().copied());
        let code = run_with(argv, &mut input, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run_capture(&["frobnicate"], "").0, EXIT_USAGE);
        assert_eq!(run_capture(&["check"], "").0, EXIT_USAGE);
        assert_eq!(run_capture(&["check", "--bessel", "--n", "3"], "").0, EXIT_USAGE);
        assert_eq!(run_capture(&["check", "--s", "1"], "").0, EXIT_USAGE);
        assert_eq!(run_capture(&["check", "--n", "3", "--s1", "1"], "").0, EXIT_USAGE);
        assert_eq!(run_capture(&["zeros", "0.5", "0"], "").0, EXIT_USAGE);
        let (code, out, _) = run_capture(&["--help"], "");
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("verify"));
    }

    #[test]
    fn check_inline_bessel_point() {
        let args = ["check", "--bessel", "--n", "3", "--s", "1", "--p", "2", "--q", "7", "--c", "1"];
        let (code, out, _) = run_capture(&args, "");
        assert_eq!(code, 0);
        assert!(out.contains("compactness\tholds_by_sufficient_condition"));
        let args = ["check", "--bessel", "--n", "3", "--s", "1", "--p", "2", "--q", "9", "--c", "1"];
        assert_eq!(run_capture(&args, "").0, 10);
    }

    #[test]
    fn check_inline_power_weights() {
        let base = ["check", "--json", "--n", "3", "--s1", "1", "--p1", "2", "--q1", "2", "--gamma1", "0"];
        let mut args = base.to_vec();
        args.extend(["--s2", "0", "--p2", "4", "--q2", "inf", "--gamma2", "1"]);
        let (code, out, _) = run_capture(&args, "");
        assert_eq!(code, 0, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], "afl-decision/1");
        assert_eq!(v["decision"]["method"], "power_weights");
        let mut args = base.to_vec();
        args.extend(["--s2", "0", "--p2", "4", "--q2", "2", "--kind2", "f"]);
        assert_eq!(run_capture(&args, "").0, 11);
    }

    #[test]
    fn check_reads_stdin_file() {
        let q = r#"{"n":3,"s":1,"p":2,"q":8.01,"c":1}"#;
        assert_eq!(run_capture(&["check", "--file", "-"], q).0, 10);
        assert_eq!(run_capture(&["check", "--file", "-", "--n", "3"], q).0, EXIT_USAGE);
        assert_eq!(run_capture(&["check", "--file", "-"], "{not json").0, EXIT_ERROR);
    }

    #[test]
    fn bare_csv_needs_dimension() {
        let csv = "mu,k,lambda\n0,1,1.0\n1,1,0.0\n";
        assert!(matches!(parse_coefficients(csv, None), Err(Failure::Usage(_))));
        let env = parse_coefficients(csv, Some(3)).ok().unwrap();
        assert_eq!((env.frame.mu_max, env.frame.k_max), (1, 1));
        let with_header = format!("# schema: {COEFFICIENTS_SCHEMA}\n# n: 2\n{csv}");
        assert!(matches!(parse_coefficients(&with_header, Some(3)), Err(Failure::Usage(_))));
        assert_eq!(parse_coefficients(&with_header, None).ok().unwrap().frame.n, 2);
        assert!(parse_coefficients("# schema: other/9\n", Some(3)).is_err());
    }
}
