use std::f64::consts::PI;
use std::path::Path;

use qswap::cli::{run, EXIT_INCOMPLETE, EXIT_OK, EXIT_USAGE};
use qswap::costate::SystemParams;
use qswap::extremals::{candidate_schedule, singular_candidate};
use qswap::su2::TargetSpec;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qswap(args: &[&str]) -> Out {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let code = run(std::iter::once("qswap").chain(args.iter().copied()), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_equal_strengths_json() {
    let r = qswap(&["solve", "--omega0", "1", "--gamma", "1", "--phi", "0", "--format", "json"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((v["tOpt"].as_f64().unwrap() - 4.442883).abs() < 1e-6);
    assert_eq!(v["family"], "sy0");
    assert_eq!(v["certified"], true);
    assert!(v["verifyErr"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["law"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_weak_control_exits_two() {
    let r = qswap(&["solve", "--omega0", "1", "--gamma", "0.2", "--phi", "0"]);
    assert_eq!(r.code, EXIT_INCOMPLETE);
    assert!(r.stderr.contains("0.325"), "{}", r.stderr);
}

#[test]
fn solve_uncertified_exits_two() {
    let r = qswap(&["solve", "--omega0", "1", "--gamma", "0.3", "--phi", "0"]);
    assert_eq!(r.code, EXIT_INCOMPLETE);
    assert!(r.stdout.contains("certified  false"));
}

#[test]
fn solve_rotated_controls_lie_on_the_rotated_axis() {
    let (g, phi): (f64, f64) = (2.0, 1.0);
    let r = qswap(&["solve", "--omega0", "1", "--gamma", "2", "--phi", "1.0", "--format", "json"]);
    assert_eq!(r.code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    // σ_x families act along the axis a quarter turn from the σ_y one
    let theta = if v["family"].as_str().unwrap().starts_with("sx") { phi - PI / 2.0 } else { phi };
    for seg in v["law"].as_array().unwrap() {
        let u: Vec<f64> = seg["u"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let s = u[0] / (g * theta.cos());
        assert!((s.abs() - 1.0).abs() < 1e-12);
        assert!((u[1] + s * g * theta.sin()).abs() < 1e-12);
        assert_eq!(u[2], 0.0);
    }
}

#[test]
fn solve_csv_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.csv");
    let r = qswap(&["solve", "--omega0", "1", "--gamma", "1", "--phi", "0", "--format", "csv", "--out", path_str(&path)]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "start,end,u_x,u_y,u_z");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(qswap(&["solve", "--omega0", "-1", "--gamma", "1", "--phi", "0"]).code, EXIT_USAGE);
    assert_eq!(qswap(&["solve", "--omega0", "1", "--gamma", "nan", "--phi", "0"]).code, EXIT_USAGE);
    assert_eq!(qswap(&["solve", "--omega0", "1", "--gamma", "1"]).code, EXIT_USAGE);
    assert_eq!(qswap(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(qswap(&["sweep", "--omega0", "1", "--gamma-lo", "2", "--gamma-hi", "1", "--points", "3"]).code, EXIT_USAGE);
    assert_eq!(qswap(&["scan", "--omega0", "1", "--gamma", "1", "--horizon", "1", "--grid", "1"]).code, EXIT_USAGE);
    let help = qswap(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("solve"));
}

#[test]
fn sweep_csv_rows() {
    let r = qswap(&["sweep", "--omega0", "1", "--gamma-lo", "0.9", "--gamma-hi", "1.1", "--points", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let mut rd = csv::Reader::from_reader(r.stdout.as_bytes());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "gamma");
    assert_eq!(&header[header.len() - 3], "t_opt");
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let winner = header.iter().position(|h| h == "winner").unwrap();
    assert_eq!(&rows[1][winner], "sy0");
    let t_opt = header.iter().position(|h| h == "t_opt").unwrap();
    for row in &rows {
        let min = (1..t_opt).filter_map(|i| row[i].parse::<f64>().ok()).fold(f64::INFINITY, f64::min);
        assert_eq!(row[t_opt].parse::<f64>().unwrap(), min);
    }
}

#[test]
fn sweep_json_rows() {
    let r = qswap(&["sweep", "--omega0", "1", "--gamma-lo", "0.5", "--gamma-hi", "2", "--points", "4", "--format", "json"]);
    assert_eq!(r.code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn scan_small_grid_is_deterministic() {
    let args = ["scan", "--omega0", "1", "--gamma", "1.5", "--horizon", "2", "--grid", "2"];
    let a = qswap(&args);
    let b = qswap(&args);
    assert_eq!(a.code, EXIT_OK, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let mut lines = a.stdout.lines();
    assert_eq!(lines.next().unwrap(), "theta,bx0,L,maxFplus,maxFminus,firstHit");
    assert_eq!(lines.count(), 4);
    assert!(a.stderr.contains("boundary") || a.stderr.contains("no trajectory"), "{}", a.stderr);
}

#[test]
fn scan_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.json");
    let r = qswap(&[
        "scan", "--omega0", "1", "--gamma", "1", "--horizon", "1", "--grid", "3", "--format", "json", "--out",
        path_str(&path),
    ]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("argmin") || r.stdout.contains("no trajectory"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let recs = v.as_array().unwrap();
    assert_eq!(recs.len(), 9);
    let keys: Vec<&String> = recs[0].as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
}

#[test]
fn verify_round_trips_solve_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.json");
    let s = qswap(&["solve", "--omega0", "1", "--gamma", "1.7", "--phi", "0.4", "--format", "json", "--out", path_str(&path)]);
    assert_eq!(s.code, EXIT_OK);
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "1.7", "--phi", "0.4", "--law", path_str(&path)]);
    assert_eq!(r.code, EXIT_OK, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("target reached"));
    // a different phase is not reached
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "1.7", "--phi", "1.4", "--law", path_str(&path)]);
    assert_ne!(r.code, EXIT_OK);
}

#[test]
fn verify_singular_law() {
    let p = SystemParams::new(1.0, 2.0).unwrap();
    let c = singular_candidate(&p).unwrap();
    let law = candidate_schedule(&c, TargetSpec::new(0.0).unwrap(), &p).unwrap();
    assert_eq!(law.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sing.json");
    std::fs::write(&path, serde_json::to_string(&law).unwrap()).unwrap();
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "2", "--phi", "0", "--law", path_str(&path)]);
    assert_eq!(r.code, EXIT_OK, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("signs (+1, -1)"), "{}", r.stdout);
}

#[test]
fn verify_rejects_bad_laws() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.json");
    std::fs::write(&big, r#"[{"duration": 1.0, "u": [0.5, 0, 0]}, {"duration": 1.0, "u": [4.0, 0, 0]}]"#).unwrap();
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "2", "--phi", "0", "--law", path_str(&big)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("segment 1"), "{}", r.stderr);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "[{\"duration\": 1.0,\n \"u\": [1, 0]}]").unwrap();
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "2", "--phi", "0", "--law", path_str(&broken)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);

    let missing = dir.path().join("missing.json");
    let r = qswap(&["verify", "--omega0", "1", "--gamma", "2", "--phi", "0", "--law", path_str(&missing)]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("missing.json"));
}

#[test]
fn solve_with_brute_force_search() {
    let r = qswap(&["--seed", "3", "solve", "--omega0", "1", "--gamma", "1", "--phi", "0", "--brute-force", "2000", "--format", "json"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["bruteForce"]["seed"], 3);
    assert!(v["bruteForce"]["found"].is_null());
}
