use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hydrofluct::matrix_io::read_binary;
use serde_json::Value;

fn small_config(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let text = std::fs::read_to_string(root.join("configs/nonequilibrium_1d.toml"))
        .unwrap()
        .replace("n = 32", "n = 10")
        .replace("steps = 120000", "steps = 2500")
        .replace("trajectories = 200", "trajectories = 40");
    let path = dir.join("run.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrofluct")).args(args).output().unwrap()
}

fn run_with(verb: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![verb, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn full_pipeline_writes_tables_matrices_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), |t| t);
    let out = tmp.path().join("out");
    let o = run_with("all", &cfg, &out, &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for stage in ["steady", "covariance", "simulate", "analyze"] {
        let s = &manifest["stages"][stage];
        assert!(s["gates"].as_array().unwrap().iter().all(|g| g["passed"] == true), "{stage}");
    }
    assert_eq!(manifest["stages"]["simulate"]["seeds"][0], 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);

    for entry in std::fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        assert!(!name.ends_with(".tmp"), "leftover {name}");
        if name.ends_with(".csv") {
            let text = std::fs::read_to_string(out.join(&name)).unwrap();
            let mut lines = text.lines();
            let header = lines.next().unwrap().split(',').count();
            let units = lines.next().unwrap().split(',').count();
            assert_eq!(header, units, "{name}");
        }
    }

    let (w, tag) = read_binary(&out.join("covariance.bin")).unwrap();
    assert_eq!(&tag, b"NODE1D3\0");
    assert_eq!(w.shape(), (24, 24));
    let csv = std::fs::read_to_string(out.join("covariance.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[..], w.row(0).iter().copied().collect::<Vec<_>>()[..]);
}

#[test]
fn unknown_keys_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), |t| t.replace("[grid]", "[grid]\nspacing = 0.1"));
    let o = run_with("steady", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("spacing"));
}

#[test]
fn missing_config_and_bad_flags_exit_with_two() {
    let o = run(&["steady"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["exit_code"], 2);
    let o = run(&["steady", "--route", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    stderr_json(&o);
}

#[test]
fn later_stage_without_inputs_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), |t| t);
    let o = run_with("analyze", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("not found"));
}

#[test]
fn solver_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), |t| t.replace("steady_max_iter = 50", "steady_max_iter = 1"));
    let o = run_with("steady", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "solver");
}

#[test]
fn failed_gate_exits_with_four_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), |t| t.replace("route_tol = 1e-6", "route_tol = 1e-300"));
    let out = tmp.path().join("out");
    assert_eq!(run_with("steady", &cfg, &out, &[]).status.code(), Some(0));
    let o = run_with("covariance", &cfg, &out, &["--route", "both"]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr_json(&o);
    assert_eq!(err["gates"][0], "covariance.route_agreement");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let gates = manifest["stages"]["covariance"]["gates"].as_array().unwrap();
    assert!(gates.iter().any(|g| g["name"] == "route_agreement" && g["passed"] == false));
}
