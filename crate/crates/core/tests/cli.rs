use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn workdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("afl-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn afl(dir: &PathBuf, args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_afl"))
        .args(args)
        .current_dir(dir)
        .env("AFL_CACHE_DIR", dir.join("cache"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or_default()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

#[test]
fn zeros_of_half_order_are_multiples_of_pi() {
    let dir = workdir("zeros");
    let out = afl(&dir, &["zeros", "0.5", "3"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let zeros: Vec<f64> = text.lines().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    for (k, z) in zeros.iter().enumerate() {
        assert!((z - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-12);
    }
    assert_eq!(zeros.len(), 3);
    assert!(dir.join("cache").read_dir().unwrap().next().is_some(), "table not cached");
    let json = afl(&dir, &["--json", "zeros", "0.5", "3"], None);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["schema"], "afl-zeros/1");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn sobolev_query_file_is_compact() {
    let dir = workdir("check");
    std::fs::write(dir.join("sobolev.json"), r#"{"n": 3, "s": 1, "p": 2, "q": 7, "c": 1}"#).unwrap();
    let out = afl(&dir, &["check", "--file", "sobolev.json", "--json"], None);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["decision"]["compactness"], "holds_by_sufficient_condition");
    assert_eq!(v["decision"]["method"], "bessel_potential");
    std::fs::write(dir.join("outside.json"), r#"{"n": 3, "s": 1, "p": 2, "q": 3, "c": 1}"#).unwrap();
    assert_eq!(afl(&dir, &["check", "--file", "outside.json"], None).status.code(), Some(11));
    assert_eq!(afl(&dir, &["check", "--file", "missing.json"], None).status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn analyze_then_synthesize_reconstructs() {
    let dir = workdir("pipeline");
    std::fs::write(dir.join("gaussian.json"), r#"{"n": 3, "kind": "gaussian", "scale": 1.0}"#).unwrap();
    let coeffs = afl(&dir, &["analyze", "--profile", "gaussian.json"], None);
    assert_eq!(coeffs.status.code(), Some(0));
    assert!(coeffs.stdout.starts_with(b"# schema: afl-coefficients/1"));
    let report = afl(&dir, &["--json", "synthesize", "--out", "synth.json"], Some(&coeffs.stdout));
    assert_eq!(report.status.code(), Some(0), "{}", String::from_utf8_lossy(&report.stderr));
    let v: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert!(v["rel_error"].as_f64().unwrap() < 1e-3, "{v}");
    let synth = std::fs::read_to_string(dir.join("synth.json")).unwrap();
    assert!(synth.contains("synthesized"));
    // JSON envelope path
    let env = afl(&dir, &["--json", "analyze", "--profile", "gaussian.json", "--mu-max", "6", "--k-max", "64"], None);
    let report = afl(&dir, &["synthesize"], Some(&env.stdout));
    let text = String::from_utf8(report.stdout).unwrap();
    let err: f64 = text.lines().find_map(|l| l.strip_prefix("rel_error\t")).unwrap().parse().unwrap();
    assert!(err < 1e-3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn norm_of_a_profile() {
    let dir = workdir("norm");
    std::fs::write(dir.join("g.json"), r#"{"n": 3, "kind": "gaussian", "scale": 1.0}"#).unwrap();
    std::fs::write(dir.join("space.json"), r#"{"kind": "b", "s": 1, "p": 2, "q": 2, "n": 3, "weight": {"variant": "power", "gamma": 0}}"#).unwrap();
    let inline = afl(&dir, &["--json", "norm", "--profile", "g.json", "--s", "1", "--p", "2", "--q", "2"], None);
    let file = afl(&dir, &["--json", "norm", "--profile", "g.json", "--space", "space.json"], None);
    let value = |o: &Output| serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["result"]["value"].as_f64().unwrap();
    assert!(value(&inline) > 0.0);
    assert_eq!(value(&inline), value(&file));
    assert_eq!(afl(&dir, &["norm", "--profile", "g.json", "--s", "1"], None).status.code(), Some(64));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_writes_reports() {
    let dir = workdir("verify");
    let out = afl(&dir, &["verify", "lemma", "--out", "reports"], None);
    assert_eq!(out.status.code(), Some(0));
    let json = std::fs::read_to_string(dir.join("reports/lemma.json")).unwrap();
    assert!(json.contains("\"schema\": \"afl-report/1\""));
    assert!(dir.join("reports/lemma.csv").exists());
    assert_eq!(afl(&dir, &["verify", "nonsense"], None).status.code(), Some(64));
    std::fs::remove_dir_all(dir).unwrap();
}
