use std::path::Path;
use std::process::{Command, Output};

fn crs_sim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crs-sim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
  "format_version": 1,
  "chemistry_path": "chem.json",
  "t_end": 300.0,
  "dt_obs": 10.0,
  "seeds": [1, 2, 3],
  "record_counts": true
}"#;

#[test]
fn gen_chem_then_run_ensemble_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = crs_sim(&["gen-chem", "--seed", "4", "--out", "chem.json"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let chem: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("chem.json")).unwrap()).unwrap();
    assert_eq!(chem["params"]["chem_seed"], 4);

    std::fs::write(d.join("cfg.json"), SMALL).unwrap();
    let o = crs_sim(&["run", "--config", "cfg.json", "--out", "run"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("run/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,total_mass,richness,max_len\n"));
    assert_eq!(csv.lines().count(), 32);
    assert!(d.join("run/trajectory_species.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["seed"], 1);

    let o = crs_sim(&["ensemble", "--config", "cfg.json", "--out", "ens"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("ens/report.json")).unwrap()).unwrap();
    assert_eq!(report["stats"]["runs"], 3);
    for seed in 1..=3 {
        assert!(d.join(format!("ens/runs/seed_{seed}.csv")).exists());
    }

    let o = crs_sim(&["compare", "--config", "cfg.json", "--out", "cmp"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("cmp/comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["per_seed_l1"].as_array().unwrap().len(), 3);
    assert!(d.join("cmp/arm_b/seed_3.csv").exists());
    // No partial files are left behind.
    for entry in walk(d) {
        assert!(!entry.ends_with(".partial"), "{entry}");
    }
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p.display().to_string());
        }
    }
    out
}

#[test]
fn print_config_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = crs_sim(&["run", "--print-config"], d);
    assert!(first.status.success());
    std::fs::write(d.join("echo.json"), &first.stdout).unwrap();
    let second = crs_sim(&["run", "--config", "echo.json", "--print-config"], d);
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn shipped_reference_scenario_matches_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let reference = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/reference.json");
    let o = crs_sim(&["run", "--print-config"], dir.path());
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        std::fs::read_to_string(reference).unwrap()
    );
}

#[test]
fn invalid_input_exits_with_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"format_version": 1, "p": 1.5}"#).unwrap();
    let o = crs_sim(&["run", "--config", "bad.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`p`"), "{}", stderr(&o));
    assert!(!d.join("out").exists());

    let o = crs_sim(&["frobnicate"], d);
    assert_eq!(o.status.code(), Some(1));

    let o = crs_sim(&["run", "--config", "missing.json"], d);
    assert_ne!(o.status.code(), Some(0));

    let o = crs_sim(&["--help"], d);
    assert_eq!(o.status.code(), Some(0));
}
