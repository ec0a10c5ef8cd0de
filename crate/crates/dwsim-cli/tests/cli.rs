use std::path::Path;
use std::process::Command;

fn dwsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dwsim"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn list_kinds() {
    let out = dwsim().arg("list-kinds").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for k in ["ssh_static", "aa_single", "aa_half_filling", "aa_dqpt", "xxz_statistics", "xxz_dynamics", "floquet_nnn", "custom"] {
        assert!(text.contains(k), "{k} missing");
    }
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let out = dwsim().arg("validate").arg(&p).output().unwrap();
        assert!(out.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn validation_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "kind = \"aa_single\"\nJ = -5.0\n[ensemble]\ncount = 4\n").unwrap();
    let out = dwsim().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("ensemble.seed") && err.contains("times"), "{err}");
    let out = dwsim().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_two_site_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("two");
    let out = dwsim()
        .args(["run", configs().join("two_site.toml").to_str().unwrap(), "--threads", "1", "--seed", "5", "--output-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let occ = std::fs::read_to_string(out_dir.join("occupations_exact.csv")).unwrap();
    let last: Vec<&str> = occ.lines().last().unwrap().split(',').collect();
    assert_eq!(last[2], "2");
    assert!((last[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["ensemble"]["seed"], 5);
}

#[test]
fn runtime_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.toml");
    std::fs::write(
        &p,
        "kind = \"floquet_nnn\"\nn = 4\nJ = -10.0\ntimes = [0.01, 0.02]\n[model]\nmodel = \"floquet_nnn\"\nk1 = 1.0\nk2 = 0.2\ntau = 0.5\n",
    )
    .unwrap();
    let out = dwsim().arg("run").arg(&p).arg("--output-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}
