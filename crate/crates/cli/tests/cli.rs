use std::process::{Command, Output};

use gibbs_core::curve::CurveClassification;
use gibbs_core::rational::{ExtRational, Q};
use gibbs_core::sampler::{Observables, SamplerParams};
use gibbs_core::selberg::ConvergenceRow;
use gibbs_core::thresholds::GibbsClass;
use gibbs_core::toric::RayReport;
use serde_json::Value;

fn gibbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs")).args(args).env_remove("GIBBS_THREADS").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let o = gibbs(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn error(args: &[&str]) -> (i32, Value) {
    let o = gibbs(args);
    let line = String::from_utf8(o.stderr).unwrap();
    (o.status.code().unwrap(), serde_json::from_str(line.trim()).unwrap())
}

#[test]
fn reduced_threshold_of_trivial_curve() {
    let v = json(&["thresholds", "--curve", r#"{"weights":[]}"#, "--n", "5", "--reduced"]);
    assert_eq!(v["value"], "2/1");
}

#[test]
fn oracle_reports_witness() {
    let v = json(&["thresholds", "--curve", r#"{"weights":["1/2"]}"#, "--n", "10", "--oracle"]);
    assert_eq!(v["value"], "2/3");
    assert!(v["witness"].is_object());
    let inf = json(&["thresholds", "--n", "3", "--reduced"]);
    let e: ExtRational = serde_json::from_value(inf["value"].clone()).unwrap();
    assert!(e.is_infinite());
}

#[test]
fn converge_two_rows() {
    let out = stdout(&["converge", "--schedule", "symmetric", "--n", "100,200"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "N,logZ_over_N,target,error");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("100,") && lines[2].starts_with("200,"));
    let rows: Vec<ConvergenceRow> =
        serde_json::from_str(&stdout(&["converge", "--n", "100,200", "--out", "json"])).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].error.abs() < rows[0].error.abs());
}

#[test]
fn small_n_is_a_validation_error() {
    let (code, e) = error(&["thresholds", "--n", "1"]);
    assert_eq!(code, 2);
    assert_eq!(e["error"], "validation");
    assert!(e["message"].as_str().unwrap().contains("at least 2"));
}

#[test]
fn bad_inputs() {
    let (code, e) = error(&["classify", "--curve", r#"{"weights":["1/0"]}"#]);
    assert_eq!(code, 2, "{e}");
    let (code, _) = error(&["classify", "--curve", r#"{"weights":["3/2"]}"#]);
    assert_eq!(code, 2);
    let (code, _) = error(&["no-such-command"]);
    assert_eq!(code, 2);
    let (code, _) = error(&["hypersimplex", "--n", "4"]);
    assert_eq!(code, 2);
}

#[test]
fn classify_round_trip() {
    let v = json(&["classify", "--curve", r#"{"weights":["1/3","1/3"]}"#]);
    let gibbs: GibbsClass = serde_json::from_value(v["gibbs"].clone()).unwrap();
    assert_eq!(gibbs.polystable, Some(true));
    let k: CurveClassification = serde_json::from_value(v.clone()).unwrap();
    assert!(k.futaki_vanishes);
    assert_eq!(v["volume"], "4/3");
}

#[test]
fn hypersimplex_vertices_parse() {
    let v = json(&["hypersimplex", "--n", "5"]);
    let verts: Vec<Vec<String>> = serde_json::from_value(v["vertices"].clone()).unwrap();
    assert_eq!(verts.len(), 30);
    let half: Q = "1/2".parse().unwrap();
    for row in verts {
        let q: Vec<Q> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(q.iter().filter(|x| **x == half).count(), 1);
    }
    assert_eq!(v["distortion_extremum"], "1/5");
}

#[test]
fn semistable_groups() {
    let cfg = r#"[0, 0, 1, "inf"]"#;
    assert_eq!(json(&["semistable", "--config", cfg])["semistable"], true);
    assert_eq!(json(&["semistable", "--config", r#"[0, 0, 0, "inf"]"#, "--group", "cstar"])["semistable"], false);
}

#[test]
fn toric_ray_json_round_trip() {
    let v = stdout(&["toric-ray", "--ray", "translation", "--gamma", "0.5", "--v", "1", "--t", "2,4,6,8,10,12,14,16", "--format", "json"]);
    let r: RayReport = serde_json::from_str(&v).unwrap();
    assert_eq!(r.samples.len(), 8);
    assert!((r.fitted.f - r.theory.f).abs() < 1e-2);
}

#[test]
fn exact_output_is_byte_stable() {
    let args = ["selberg", "--w", "0.3,0.3,0.3", "--n", "100"];
    assert_eq!(stdout(&args), stdout(&args));
    let args = ["thresholds", "--curve", r#"{"weights":["1/2","2/3"]}"#, "--n", "17", "--oracle"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn sample_is_reproducible_per_seed() {
    let args = ["sample", "--n", "6", "--beta", "-0.5", "--steps", "2e4", "--seed", "11"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let v: Value = serde_json::from_str(&a).unwrap();
    let p: SamplerParams = serde_json::from_value(v["params"].clone()).unwrap();
    assert_eq!((p.n, p.n_steps, p.seed), (6, 20_000, 11));
    let obs: Observables = serde_json::from_value(v["observables"].clone()).unwrap();
    assert!(obs.max_moment_sup <= p.eps + 1e-12);
    let other = stdout(&["sample", "--n", "6", "--beta", "-0.5", "--steps", "2e4", "--seed", "12"]);
    assert_ne!(a, other);
}

#[test]
fn manifest_records_checksum() {
    let dir = std::env::temp_dir().join(format!("gibbs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("h.json");
    let o = gibbs(&["hypersimplex", "--n", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let body = std::fs::read(&out).unwrap();
    let m: Value = serde_json::from_slice(&std::fs::read(dir.join("h.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "hypersimplex");
    assert_eq!(m["params"]["n"], 3);
    use sha2::Digest;
    let want: String = sha2::Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["output_sha256"], want);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn thread_cap_reported() {
    let o = Command::new(env!("CARGO_BIN_EXE_gibbs")).args(["mabuchi-inf", "--w", "0,0,0"]).env("GIBBS_THREADS", "1").output().unwrap();
    assert!(o.status.success());
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["threads"], 1);
}
