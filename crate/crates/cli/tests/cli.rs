use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fockgrad::checks::GateSpec;
use fockgrad::optimizer::RunRecord;
use fockgrad::{BuildOptions, GateTensor, C64};

const HEADER: usize = 16;

fn fockgrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockgrad")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn payload_entry(bytes: &[u8], k: usize) -> C64 {
    let at = HEADER + 16 * k;
    C64::new(
        f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()),
        f64::from_le_bytes(bytes[at + 8..at + 16].try_into().unwrap()),
    )
}

#[test]
fn dump_displacement_starts_with_the_vacuum_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.fgt");
    let o = fockgrad(&["gate", "dump", "displacement", "--gamma", "1", "--cutoff", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("sha256 "));
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(&bytes[..4], b"FGT1");
    assert_eq!(bytes.len(), HEADER + 16 * 100);
    assert!((payload_entry(&bytes, 0) - C64::new((-0.5f64).exp(), 0.0)).norm() < 1e-15);
    // round trip reproduces the library tensor bit for bit
    let loaded = GateTensor::load(&out).unwrap();
    let built = GateSpec::Displacement { gamma: C64::new(1.0, 0.0) }.build(10, &BuildOptions::default()).unwrap();
    assert_eq!(loaded.to_fgt1_bytes().unwrap(), bytes);
    assert_eq!(built.to_fgt1_bytes().unwrap(), bytes);
}

#[test]
fn dump_identity_and_banded_gates() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("sub").join("id.fgt");
    let o = fockgrad(&["gate", "dump", "identity", "--modes", "2", "--cutoff", "3", "--out", id.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = std::fs::read(&id).unwrap();
    for k in 0..81 {
        let (row, col) = (k / 9, k % 9);
        let expected = if row == col { 1.0 } else { 0.0 };
        assert_eq!(payload_entry(&bytes, k), C64::new(expected, 0.0));
    }
    let bs = dir.path().join("bs.fgt");
    let args = ["gate", "dump", "beamsplitter", "--theta", "0.3", "--varphi", "-0.2", "--cutoff", "5", "--out", bs.to_str().unwrap()];
    let first = fockgrad(&args);
    assert!(first.status.success());
    let again = fockgrad(&args);
    assert_eq!(stdout(&first), stdout(&again), "dumps are deterministic");
    assert!(stdout(&first).contains("ParticleConserving"));
}

#[test]
fn check_reports_each_oracle() {
    let o = fockgrad(&["gate", "check", "squeezer", "--r", "0.5", "--cutoff", "10"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("general recurrence"));
    assert!(text.contains("padded exponential"));
    assert!(!text.contains("FAIL"));

    let o = fockgrad(&["gate", "check", "cubic", "--eta", "2", "--cutoff", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("position-space quadrature"));

    let o = fockgrad(&["gate", "check", "beamsplitter", "--theta", "0.7", "--varphi", "-1.1", "--cutoff", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("selection-rule violations: 0.000e0"));
}

#[test]
fn check_writes_a_json_report_from_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"gate": "two_mode_squeezer", "r": 0.4, "delta": 0.1}"#).unwrap();
    let report = dir.path().join("report.json");
    let o = fockgrad(&["gate", "check", "--spec", spec.to_str().unwrap(), "--cutoff", "6", "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["gate"]["gate"], "two_mode_squeezer");
    assert!(v["lines"].as_array().unwrap().len() >= 5);
}

#[test]
fn exit_codes() {
    // strong squeezing defeats the padded-exponential oracle at 48 levels
    let o = fockgrad(&["gate", "check", "squeezer", "--r", "2.5", "--cutoff", "6"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL padded exponential"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.fgt");
    let o = fockgrad(&["gate", "dump", "interferometer", "--modes", "3", "--cutoff", "40", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("budget"));
    assert!(!out.exists());

    assert_eq!(fockgrad(&["gate", "dump", "bogus", "--cutoff", "3", "--out", "x"]).status.code(), Some(3));
    assert_eq!(fockgrad(&["gate", "check", "squeezer", "--r", "-1", "--cutoff", "4"]).status.code(), Some(3));
    assert_eq!(fockgrad(&["prepare", "/nonexistent/run.toml"]).status.code(), Some(3));
    assert_eq!(fockgrad(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "target = [[1.0, 0.0]]\nlayers = 1\ncutoff = 10\nsteps = \"fifty\"\nseed = 0\n").unwrap();
    let o = fockgrad(&["prepare", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"target\": [[1, 0]],\n  \"layers\": 1,\n  \"cutoff\": 10,\n  \"steps\": 5,\n  \"seed\": 0,\n  \"adam\": {\"lr\": 0}\n}\n").unwrap();
    let o = fockgrad(&["prepare", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 7") && stderr(&o).contains("lr"), "{}", stderr(&o));
}

#[test]
fn bench_emits_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let o = fockgrad(&[
        "gate", "bench", "displacement", "--gamma", "0.5,0.5", "--cutoff", "25,50,100,200", "--repeats", "3", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 3);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap() > 0.0));
    assert!(stdout(&o).contains("log-log slope"));
}

fn run_config(name: &str) -> Vec<RunRecord> {
    let dir = tempfile::tempdir().unwrap();
    let o = fockgrad(&["prepare", config(name).to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut records = Vec::new();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            records.push(serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap());
            let trace = path.with_file_name(path.file_name().unwrap().to_str().unwrap().replace("run_", "trace_").replace(".json", ".csv"));
            assert!(trace.exists());
        }
    }
    records
}

fn best(records: &[RunRecord]) -> f64 {
    records.iter().map(|r| r.final_fidelity).fold(0.0, f64::max)
}

#[test]
fn bundled_vacuum_config() {
    let records = run_config("vacuum.toml");
    assert_eq!(records.len(), 1);
    assert!(best(&records) >= 1.0 - 1e-6);
}

#[test]
fn bundled_single_photon_config() {
    let records = run_config("single_photon.toml");
    assert_eq!(records.len(), 3);
    assert!(best(&records) >= 0.995, "{}", best(&records));
}

#[test]
fn bundled_on_state_config() {
    let records = run_config("on_state.toml");
    assert_eq!(records.len(), 3);
    assert!(best(&records) >= 0.99, "{}", best(&records));
}

#[test]
fn prepare_is_reproducible_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.json");
    std::fs::write(&cfg, r#"{"target": [[0, 0], [1, 0]], "layers": 2, "cutoff": 8, "steps": 40, "seed": 4}"#).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = fockgrad(&["prepare", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let load = |d: &Path| -> RunRecord { serde_json::from_str(&std::fs::read_to_string(d.join("run_seed11.json")).unwrap()).unwrap() };
    let (ra, rb) = (load(&a), load(&b));
    assert_eq!(ra.losses, rb.losses);
    assert_eq!(ra.final_params, rb.final_params);
    assert_eq!(ra.seed, 11);
}
