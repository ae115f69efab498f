use std::io::Write;
use std::process::{Command, Output};

fn ribbonchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ribbonchain")).args(args).output().unwrap()
}

fn script(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_reports_severance() {
    let f = script("CHAIN 5\nM 3 Z +\n");
    let out = ribbonchain(&["run", f.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Severance"), "{text}");
    assert!(text.contains("segments: [1,2] [4,5]"), "{text}");
}

#[test]
fn run_json_and_abort_step() {
    let f = script("CHAIN 5\nM 3 X +\nM 2 Z +\n");
    let out = ribbonchain(&["--format", "json", "run", f.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(err["code"], "unsupported_composition");
    assert_eq!(err["step"], 2);

    let out = ribbonchain(&["--format", "json", "--hybrid", "run", f.path().to_str().unwrap()]);
    assert!(out.status.success());
    let record: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(record["steps"][1]["mode"], "oracle_only");
}

#[test]
fn parse_errors_are_located() {
    let f = script("M 1 Z +\n");
    let out = ribbonchain(&["run", f.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1, column 1"));
}

#[test]
fn export_and_build() {
    let f = script("CHAIN 3\nM 2 Y +\n");
    let out = ribbonchain(&["export", f.path().to_str().unwrap()]);
    let diagram: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(diagram["events"][0]["kind"], "TwistSplice(Right)");
    assert_eq!(diagram["components"][0]["ribbons"][0]["twist"], 90);

    let out = ribbonchain(&["export", "--what", "state", f.path().to_str().unwrap()]);
    let dump: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(dump["amplitudes"].as_array().unwrap().len(), 4);

    let out = ribbonchain(&["--oracle", "off", "export", "--what", "state", f.path().to_str().unwrap()]);
    assert!(!out.status.success());

    let out = ribbonchain(&["--max-qubits", "4", "build", "6"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("exceeds the oracle limit"));
}

#[test]
fn verify_small_range() {
    let out = ribbonchain(&["verify", "--n-max", "4"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("verify: PASSED"));
}
