//! Output contract consumed by the plotting scripts: file names, headers, manifest.

use std::collections::BTreeMap;
use std::path::Path;

use dwsim::experiment::{run_experiment, ExperimentConfig, MANIFEST};

fn run(toml: &str, dir: &Path) -> serde_json::Value {
    let mut cfg = ExperimentConfig::from_toml(toml).unwrap();
    cfg.output = dir.to_path_buf();
    run_experiment(&cfg).unwrap();
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap()
}

/// Header and rows; every field must be a number, "nan"/"inf", or a plain label.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "{}", path.display());
    }
    (header, rows)
}

fn headers(dir: &Path) -> BTreeMap<String, Vec<String>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read_csv(&p).0))
        .collect()
}

fn manifest_files(m: &serde_json::Value) -> Vec<(String, usize)> {
    let runs = m["runs"].as_array().unwrap();
    runs.iter()
        .flat_map(|r| r["files"].as_array().unwrap().iter())
        .chain(m["files"].as_array().unwrap())
        .map(|f| (f["name"].as_str().unwrap().to_owned(), f["rows"].as_u64().unwrap() as usize))
        .collect()
}

#[test]
fn dynamics_with_noise() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(
        "kind = \"aa_dqpt\"\nn = 5\nJ = -5.0\ninitial = \"01010\"\nrescale = \"standard\"\ntimes = { t_max = 2.0, samples = 5 }\n\
         [model]\nmodel = \"aubry_andre\"\nlambda = 2.0\nmu = 1.5\n[noise]\nrelax = 0.002\ndephase = 0.01\n",
        dir.path(),
    );
    let h = headers(dir.path());
    assert_eq!(h["occupations_exact.csv"], ["T_evol", "T_wall", "site", "p"]);
    assert_eq!(h["occupations_dw_noisy.csv"], ["T_evol", "T_wall", "site", "p"]);
    assert_eq!(h["fidelity.csv"], ["T_evol", "T_wall", "state_fidelity", "subspace_fidelity"]);
    assert_eq!(h["diagnostics.csv"], ["T_evol", "T_wall", "trace", "hermiticity", "min_eigenvalue"]);
    assert_eq!(h["survival.csv"][0..2], ["T_evol", "T_wall"]);
    let (_, occ) = read_csv(&dir.path().join("occupations_dw.csv"));
    assert_eq!(occ.len(), 5 * 5);
    // T_wall = alpha * T_evol
    let alpha = m["runs"][0]["summary"]["alpha"].as_f64().unwrap();
    for r in &occ {
        let (te, tw): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((tw - alpha * te).abs() < 1e-12);
    }
    for (name, rows) in manifest_files(&m) {
        assert_eq!(read_csv(&dir.path().join(&name)).1.len(), rows, "{name}");
    }
    assert!(m["summary"]["max_trace_drift"].as_f64().unwrap() < 1e-10);
}

#[test]
fn sweeps_prefix_groups_and_add_a_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(
        "kind = \"ssh_static\"\nn = 6\nJ = -8.0\nsectors = [1, 3]\n[model]\nmodel = \"ssh\"\nv = 0.3\nw = 1.0\n[sweep]\nJ = [-8.0, -16.0]\n",
        dir.path(),
    );
    let h = headers(dir.path());
    for g in ["g000_", "g001_"] {
        assert_eq!(h[&format!("{g}spectrum.csv")], ["M", "index", "eigenvalue_exact", "eigenvalue_eff", "eigenvalue_dw"]);
        assert_eq!(h[&format!("{g}eigenvectors.csv")], ["M", "index", "site", "weight_exact", "weight_dw"]);
    }
    let (head, rows) = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(&head[..2], ["group", "J"]);
    assert_eq!(rows.len(), 2);
    assert!(m["summary"].get("beta_infidelity_op_m3").is_some());
    assert_eq!(m["runs"][1]["parameters"]["J"].as_f64(), Some(-16.0));
}

#[test]
fn spectral_and_floquet_tables() {
    let dir = tempfile::tempdir().unwrap();
    run(
        "kind = \"xxz_statistics\"\nn = 8\nJ = -5.0\nrescale = \"standard\"\n[model]\nmodel = \"xxz\"\nt = 1.0\ndelta = 1.0\ntheta = 1.0\n",
        dir.path(),
    );
    let h = headers(dir.path());
    assert_eq!(h["spectral_exact.csv"], ["index", "eigenvalue", "r_eta", "s_n"]);
    assert_eq!(h["spacing_histogram_eff.csv"], ["bin_lo", "bin_hi", "count", "density", "p_poisson", "p_wigner_dyson"]);

    let dir = tempfile::tempdir().unwrap();
    let m = run(
        "kind = \"floquet_nnn\"\nn = 5\nJ = -15.0\ninitial = \"00100\"\ntimes = [1.5, 3.0]\n\
         [model]\nmodel = \"floquet_nnn\"\nk1 = 1.0\nk2 = 0.2\ntau = 0.5\n",
        dir.path(),
    );
    let h = headers(dir.path());
    for f in ["occupations_reference.csv", "occupations_dw.csv", "occupations_fermi.csv"] {
        assert_eq!(h[f], ["T_evol", "T_wall", "site", "p"]);
    }
    assert!(m["summary"]["min_fermi_fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn invalid_configs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut cfg = ExperimentConfig::from_toml("kind = \"custom\"\nJ = 0.0\ninitial = \"10\"\ntimes = [1.0]\n[chain]\nt = [1.0]\n").unwrap();
    cfg.output = out.clone();
    assert!(run_experiment(&cfg).is_err());
    assert!(!out.exists());
}
