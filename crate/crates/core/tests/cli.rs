use std::process::Command;

fn csipred() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csipred"))
}

#[test]
fn unknown_figure_is_a_usage_error_listing_keys() {
    let out = csipred().args(["sweep", "--figure", "waterfall"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fd_tcsi") && err.contains("profile_generalization"), "{err}");
}

#[test]
fn verify_passes_and_negative_controls_fail() {
    let ok = csipred().arg("verify").output().unwrap();
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(ok.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("[PASS]")), "{text}");

    let bad = csipred().args(["verify", "--corrupt-cqi-table"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL] cqi table"));

    let bad = csipred().args(["verify", "--gradient-bug"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL] gradient check"));
}

#[test]
fn missing_cqi_table_is_reported_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "cqi_table = \"missing_table.toml\"\n").unwrap();
    let out = csipred().args(["generate", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_table.toml"));
}

#[test]
fn generate_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "seed = 4\n[channel]\ndoppler_hz = 5.0\nn_slots = 1500\n[[predictors]]\nkind = \"wiener\"\ninput_len = 2\nt_csi = 4\nmode = \"tdd_vector\"\ntarget = \"best_cqi\"\n",
    )
    .unwrap();
    let out_dir = dir.path().join("data");
    let out = csipred()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("train = 0.784") && manifest.contains("seed = 4"), "{manifest}");
}
