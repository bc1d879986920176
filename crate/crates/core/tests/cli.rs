use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leviflat")).args(args).output().expect("spawn cli")
}

#[test]
fn list_shows_ids_with_formulas() {
    let out = cli(&["--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 25, "only {} identities listed", lines.len());
    assert!(text.contains("frobenius.iii") && text.contains("dγ∧γ = 0"));
    assert!(text.contains("prop.dfrak_squared") && text.contains("𝔡∘𝔡 = 0"));
}

#[test]
fn passing_run_exits_zero_and_writes_report() {
    let out = cli(&["--scenario", "t3_twisted", "--suite", "frobenius,excalc.d_squared", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["summary"]["total"], 4);
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn failing_identity_exits_one() {
    let out = cli(&["--scenario", "broken_nonintegrable", "--suite", "frobenius.iii", "--points", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        &["--scenario", "no_such_scenario"][..],
        &["--suite", "no_such_identity"][..],
        &["--suite", "frobenius", "--tol", "nonsense"][..],
        &["--suite", "frobenius", "--tol", "missing.id=1e-3"][..],
        &["--points", "0"][..],
    ] {
        assert_eq!(cli(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn tolerance_override_can_flip_status() {
    let out = cli(&["--scenario", "t3_twisted", "--suite", "excalc.cartan_flow", "--points", "2", "--tol", "excalc.cartan_flow=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let tol = v["identities"][0]["tolerance"].as_f64().unwrap();
    assert!((tol / 1e-30 - 1.0).abs() < 1e-12);
}

#[test]
fn report_bytes_do_not_depend_on_threads_or_repetition() {
    let args = ["--scenario", "t5_product", "--suite", "dgla,hform", "--points", "4"];
    let a = cli(&[&args[..], &["--jobs", "1"]].concat()).stdout;
    let b = cli(&[&args[..], &["--jobs", "4"]].concat()).stdout;
    let c = cli(&[&args[..], &["--jobs", "4"]].concat()).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn seed_changes_samples() {
    let a = cli(&["--suite", "excalc.cartan_flow", "--points", "2", "--seed", "1"]).stdout;
    let b = cli(&["--suite", "excalc.cartan_flow", "--points", "2", "--seed", "2"]).stdout;
    assert_ne!(a, b);
}

#[test]
fn scenario_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_leviflat"))
        .env("LEVIFLAT_SCENARIO", "broken_nonintegrable")
        .args(["--suite", "expect.non_integrable", "--points", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn run_and_list_subcommands() {
    let a = cli(&["run", "--scenario", "t3_twisted", "--suite", "frobenius", "--points", "2"]);
    let b = cli(&["--scenario", "t3_twisted", "--suite", "frobenius", "--points", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let l = String::from_utf8(cli(&["list"]).stdout).unwrap();
    assert!(l.contains("prop.beth_squared") && l.contains("ℶ̄² = 0"));
    assert!(l.contains("thm.tangent.eqP2") && l.contains("∂̄P = −β^{0,1}∧H"));
}

#[test]
fn broken_scenario_fails_frobenius_with_large_residual() {
    let out = cli(&["run", "--scenario", "broken_nonintegrable", "--suite", "frobenius", "--points", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let iii = v["identities"].as_array().unwrap().iter().find(|r| r["id"] == "frobenius.iii").unwrap();
    assert!(iii["max_rel"].as_f64().unwrap() > 0.1);
    assert_eq!(iii["pass"], false);
}

#[test]
fn comma_separated_tolerances() {
    let out = cli(&[
        "--scenario", "t3_twisted", "--suite", "frobenius.iii,frobenius.iv", "--points", "2",
        "--tol", "frobenius.iii=1e-3,frobenius.iv=1e-4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["tol"].as_object().unwrap().len(), 2);
}

#[test]
fn scenario_file_from_repo_runs() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/twisted_tilted.toml");
    let out = cli(&["--scenario", path, "--suite", "expect.*,frobenius,cor.levi_flat_mc.family", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<_> = v["identities"].as_array().unwrap().iter().filter(|r| r["status"] == "pass").map(|r| r["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"expect.exact_witness") && ids.contains(&"cor.levi_flat_mc.family"), "{ids:?}");
}
