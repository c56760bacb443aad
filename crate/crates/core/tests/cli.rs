use std::path::PathBuf;
use std::process::Command;

use robust_matching::cli::{run, EnumerateJson, GenJson, LatticeJson, ShiftJson, SolveJson};
use robust_matching::oracle::enumerate_stable_bruteforce;
use robust_matching::{parse_instance, ShiftStatus};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name).to_string_lossy().into_owned()
}

fn exec(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("robust-matching").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn roundtrip<T: serde::Serialize + serde::de::DeserializeOwned>(text: &str) -> T {
    let value: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(value["schema"], 1);
    let parsed: T = serde_json::from_value(value.clone()).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), value);
    parsed
}

#[test]
fn solve_prints_matching_and_objective() {
    let (code, out, _) =
        exec(&["solve", "--instance", &fixture("fixtures/I3.txt"), "--dist", &fixture("fixtures/I3_single_shift.dist")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("b1 g1\nb2 g2\nb3 g3\n"), "{out}");
    assert!(out.contains("objective 0/1\n"));
}

#[test]
fn solve_json_is_versioned() {
    let (code, out, _) = exec(&[
        "solve",
        "--instance",
        &fixture("fixtures/I2.txt"),
        "--dist",
        "full-uniform",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let report: SolveJson = roundtrip(&out);
    // both boy-list shifts break M0, both girl-list shifts break Mz
    assert_eq!(report.objective, "1/2");
}

#[test]
fn solve_dumps() {
    let (code, out, _) = exec(&[
        "solve",
        "--instance",
        &fixture("fixtures/I3.txt"),
        "--dist",
        &fixture("fixtures/I3_single_shift.dist"),
        "--dump-network",
        "--dump-ip",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("SHIFT R1 -> R0 1/1"));
    assert!(out.contains("minimize"));
}

#[test]
fn analyze_shift_reports_endpoints() {
    let (code, out, _) =
        exec(&["analyze-shift", "--instance", &fixture("fixtures/I2.txt"), "--shift", "GIRL_LIST g1 b1 1"]);
    assert_eq!(code, 0);
    for line in ["status PROPER", "rho_in R0", "rho_out T", "mab_size 1"] {
        assert!(out.contains(line), "{out}");
    }
    let (_, out, _) = exec(&[
        "analyze-shift",
        "--instance",
        &fixture("fixtures/I3.txt"),
        "--shift",
        "GIRL_LIST g1 b1 1",
        "--format",
        "json",
    ]);
    let report: ShiftJson = roundtrip(&out);
    assert_eq!(report.status, ShiftStatus::Proper);
    assert_eq!((report.rho_in.as_deref(), report.rho_out.as_deref()), (Some("R0"), Some("R1")));
    assert_eq!(report.mab_size, Some(1));
}

#[test]
fn represent_enumerates_robust_matchings() {
    let (code, out, _) = exec(&[
        "represent",
        "--instance",
        &fixture("fixtures/I3.txt"),
        "--dist",
        &fixture("fixtures/I3_single_shift.dist"),
        "--enumerate",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("E0: R0 R1"), "{out}");
    assert!(out.contains("\nb1 g1\nb2 g2\nb3 g3\n"));
    assert!(out.contains("\nb1 g3\nb2 g1\nb3 g2\n"));
    assert!(!out.contains("b1 g2"));
}

#[test]
fn enumerate_and_lattice() {
    let (code, out, _) = exec(&["enumerate", "--instance", &fixture("fixtures/I3.txt")]);
    assert_eq!(code, 0);
    assert_eq!(out.split("\n\n").count(), 3);
    let (_, out, _) = exec(&["enumerate", "--instance", &fixture("fixtures/I3.txt"), "--format", "json"]);
    assert_eq!(roundtrip::<EnumerateJson>(&out).matchings.len(), 3);
    let (code, out, _) = exec(&["lattice", "--instance", &fixture("fixtures/I3.txt"), "--format", "json"]);
    assert_eq!(code, 0);
    let lattice: LatticeJson = roundtrip(&out);
    assert_eq!(lattice.rotations.len(), 2);
    assert_eq!(lattice.hasse.len(), 3);
}

#[test]
fn verify_passes_on_fixtures() {
    for name in ["fixtures/I2.txt", "fixtures/I3.txt", "tests/golden/gen_n6_seed42.txt"] {
        let (code, out, err) = exec(&["verify", "--instance", &fixture(name), "--dist", "full-uniform"]);
        assert_eq!(code, 0, "{name}: {out}{err}");
        assert!(!out.contains("FAIL"));
    }
}

#[test]
fn gen_is_reproducible() {
    let a = exec(&["gen", "--n", "5", "--seed", "7"]);
    let b = exec(&["gen", "--n", "5", "--seed", "7"]);
    assert_eq!(a, b);
    assert_eq!(a.0, 0);
    let (_, json, _) = exec(&["gen", "--n", "5", "--seed", "7", "--format", "json"]);
    let parsed: GenJson = roundtrip(&json);
    assert_eq!(parsed.instance, parse_instance(&a.1).unwrap());
}

#[test]
fn gen_golden_file() {
    let golden = std::fs::read_to_string(fixture("tests/golden/gen_n6_seed42.txt")).unwrap();
    let (_, out, _) = exec(&["gen", "--n", "6", "--seed", "42"]);
    assert_eq!(out, golden);
    let inst = parse_instance(&golden).unwrap();
    assert_eq!(enumerate_stable_bruteforce(&inst).unwrap().len(), 2);
    let (_, listed, _) = exec(&["enumerate", "--instance", &fixture("tests/golden/gen_n6_seed42.txt")]);
    assert_eq!(listed.split("\n\n").count(), 2);
}

#[test]
fn input_errors_exit_one() {
    let (code, _, err) = exec(&["solve", "--instance", "/nonexistent/instance.txt", "--dist", "full-uniform"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/instance.txt"));

    let dir = std::env::temp_dir().join(format!("robust-matching-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "2\nb1: g1 g2\nb2: g2\ng1: b1 b2\ng2: b1 b2\n").unwrap();
    let (code, _, err) = exec(&["lattice", "--instance", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("non-mutual pair b2 g1"), "{err}");

    let (code, _, err) = exec(&["analyze-shift", "--instance", &fixture("fixtures/I2.txt"), "--shift", "GIRL_LIST g1 b2 1"]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = exec(&["frobnicate"]);
    assert_eq!(code, 1);
    let (code, _, _) = exec(&["gen", "--n", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_robust-matching");
    let ok = Command::new(bin)
        .args(["verify", "--instance", &fixture("fixtures/I2.txt"), "--dist", "full-uniform"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["solve", "--instance", "/nonexistent", "--dist", "x"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
