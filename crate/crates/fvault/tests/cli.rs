use std::path::Path;
use std::process::{Command, Output};

fn fvault(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvault"))
        .current_dir(dir)
        .env_remove("FVAULT_CORES")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn enroll_and_verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |o: &Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    ok(&fvault(d, &["synth", "--out", "ds", "--fingers", "2", "--impressions", "2", "--zero-noise", "--descriptor-code", "2"]));

    for (scheme, ext) in [("classic", "fvc"), ("descriptor", "fvd"), ("grid", "fvg")] {
        let vault = format!("v.{ext}");
        let mut args = vec!["enroll", "--scheme", scheme, "--code", "2", "--template", "ds/finger1_imp1.txt", "--out", &vault];
        if scheme == "descriptor" {
            args.extend(["--descriptors", "ds/finger1_imp1.desc"]);
        }
        ok(&fvault(d, &args));

        let query = |f: u32| {
            let mut a = vec![
                "verify".to_string(),
                "--json".into(),
                "--vault".into(),
                vault.clone(),
                "--template".into(),
                format!("ds/finger{f}_imp2.txt"),
            ];
            if scheme == "descriptor" {
                a.extend(["--descriptors".into(), format!("ds/finger{f}_imp2.desc")]);
            }
            a
        };
        let genuine = fvault(d, &query(1).iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(genuine.status.code(), Some(0), "{scheme}");
        assert_eq!(json(&genuine)["accepted"], true);
        let impostor = fvault(d, &query(2).iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(impostor.status.code(), Some(1), "{scheme}");
    }
}

#[test]
fn usage_and_io_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fvault(dir.path(), &["verify"]).status.code(), Some(2));
    assert_eq!(fvault(dir.path(), &["tables", "--table", "9"]).status.code(), Some(2));
    let missing = fvault(dir.path(), &["verify", "--vault", "nope", "--template", "nope.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope"));
}

#[test]
fn tables_print_in_both_forms() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["2", "3", "4", "5"] {
        let o = fvault(dir.path(), &["tables", "--table", t]);
        assert!(o.status.success());
        assert!(!stdout(&o).is_empty());
        let j = json(&fvault(dir.path(), &["--json", "tables", "--table", t]));
        assert!(!j.as_array().unwrap().is_empty());
    }
    let t5 = json(&fvault(dir.path(), &["--json", "tables", "--table", "5"]));
    let k9 = t5.as_array().unwrap().iter().find(|r| r["k"] == 9).unwrap();
    let q = k9["queries"].as_f64().unwrap();
    assert!((q / 8.13e8 - 1.0).abs() < 0.01);
}

#[test]
fn interval_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let ci = json(&fvault(dir.path(), &["--json", "--cores", "4", "stats", "ci", "--s", "27", "--n", "4856", "--idt", "0.198"]));
    assert!((ci["lower"].as_f64().unwrap() - 0.00367).abs() < 1e-4);
    assert!((ci["upper"].as_f64().unwrap() - 0.00808).abs() < 1e-4);
    let secs = ci["attack_seconds"][0].as_f64().unwrap();
    assert!((secs - 4.22).abs() < 0.05);
    let rot = json(&fvault(dir.path(), &["--json", "stats", "rot", "--n", "4856"]));
    assert!((rot["upper"].as_f64().unwrap() - 3.0 / 4856.0).abs() < 1e-12);
}

#[test]
fn evaluation_json_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(fvault(d, &["synth", "--out", "ds", "--fingers", "3", "--impressions", "2", "--seed", "5"]).status.success());
    let run = |cores: &str| {
        let mut j = json(&fvault(d, &["--json", "--cores", cores, "eval", "--dataset", "ds", "--k", "7"]));
        j.as_object_mut().unwrap().remove("timing");
        for row in j["per_config_rows"].as_array_mut().unwrap() {
            row.as_object_mut().unwrap().remove("timing");
        }
        j
    };
    let a = run("1");
    assert_eq!(a, run("2"));
    assert_eq!(a["far"]["trials"], 3);
    assert_eq!(a["config"]["k"], 7);
}

#[test]
fn brute_force_respects_budget() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(fvault(d, &["synth", "--out", "ds", "--fingers", "1", "--impressions", "1"]).status.success());
    assert!(fvault(d, &["enroll", "--template", "ds/finger1_imp1.txt", "--out", "v.fvc"]).status.success());
    let o = fvault(d, &["--json", "--budget", "1000", "attack", "bf", "--vault", "v.fvc"]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["success"], false);
    assert_eq!(j["iterations"], 1000);
}
