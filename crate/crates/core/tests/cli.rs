use std::process::{Command, Output};

use pseslab::report::ClaimReport;

fn pseslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseslab"))
        .args(args)
        .env_remove("PSESLAB_SEED")
        .output()
        .expect("spawn pseslab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn constants_for_two_and_three_qubit_dimensions() {
    let o = pseslab(&["constants", "--dloc", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("0.2071068") && s.contains("1.0823922") && s.contains("0.5000000"), "{s}");
    let s = stdout(&pseslab(&["constants", "--dloc", "3"]));
    assert!(s.contains("r_0 = (sqrt(2D) - 2)/4 = 0.5606602"), "{s}");
    assert_eq!(pseslab(&["constants", "--dloc", "1"]).status.code(), Some(2));
}

#[test]
fn single_claim_json_round_trips() {
    let o = pseslab(&[
        "verify", "--claim", "lemma-con1", "--dloc", "2", "--r", "0.2", "--trials", "100000",
        "--seed", "7", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: ClaimReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep.claim_id, "lemma-con1");
    assert_eq!((rep.seed, rep.trials), (7, 100_000));
    assert_eq!(rep.params["r"], 0.2);
    assert!(rep.pass);
    let again: ClaimReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(again, rep);
}

#[test]
fn quick_run_of_all_claims_passes() {
    let o = pseslab(&["verify", "--all", "--profile", "quick", "--dloc", "2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let reps: Vec<ClaimReport> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(reps.len(), 12);
    assert!(reps.iter().all(|r| r.seed == 1));
}

#[test]
fn usage_errors_exit_with_two() {
    let unknown = pseslab(&["verify", "--claim", "lemma-nope"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("lemma-con1, lemma-con2"));
    for args in [
        &["verify", "--claim", "lemma-con1", "--r", "0.1", "--epsilon", "0.5"][..],
        &["verify", "--claim", "lemma-con1", "--trials", "0"],
        &["verify", "--claim", "lemma-con1", "--tol", "1.5"],
        &["verify", "--claim", "lemma-con2", "--r", "0.3"],
        &["verify", "--all", "--r", "0.1"],
        &["verify"],
        &["demo-discrimination", "--r", "0"],
        &["demo-discrimination", "--r", "0.5"],
        &["frobnicate"],
    ] {
        assert_eq!(pseslab(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn seed_precedence_is_flag_then_env_then_zero() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_pseslab"));
        c.args(["verify", "--claim", "prop-cap"]).env_remove("PSESLAB_SEED");
        if let Some(e) = env {
            c.env("PSESLAB_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let rep: ClaimReport = serde_json::from_slice(&c.output().unwrap().stdout).unwrap();
        rep.seed
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("5"), None), 5);
    assert_eq!(run(Some("5"), Some("9")), 9);
}

#[test]
fn csv_and_text_formats() {
    let dir = std::env::temp_dir().join(format!("pseslab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cap.csv");
    let o = pseslab(&[
        "verify", "--claim", "prop-cap", "--format", "csv", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "claim_id", "d_loc", "D", "params", "seed", "trials", "max_violation", "pass", "notes",
            "wall_time_s", "tool_version"
        ]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "prop-cap");
    assert_eq!(&rows[0][7], "true");
    std::fs::remove_dir_all(&dir).unwrap();

    let s = stdout(&pseslab(&["verify", "--claim", "prop-cap", "--format", "text"]));
    assert!(s.starts_with("prop-cap") && s.contains("PASS"), "{s}");
}

#[test]
fn discrimination_demo_two_qubits() {
    let o = pseslab(&["demo-discrimination", "--dloc", "2", "--epsilon", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("overlap Tr rho1 rho2 = 0.1210938"), "{s}");
    assert!(s.contains("eps^2(8-eps^2)/32 = 0.0605469"), "{s}");
    assert!(s.contains("rho1: 1.000000000000  0.000000000000"), "{s}");
}

#[test]
fn discrimination_demo_two_qutrits_with_dump() {
    let dir = std::env::temp_dir().join(format!("pseslab-demo-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("demo.json");
    let o = pseslab(&[
        "demo-discrimination", "--dloc", "3", "--r", "0.25", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("M1 spectrum: [1.2500000, 0.5000000"), "{s}");
    assert!(s.contains("rho2: 0.000000000000  1.000000000000"), "{s}");
    let dump: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(dump["effects"][0]["re"].as_array().unwrap().len(), 9);
    assert_eq!(dump["states"].as_array().unwrap().len(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
