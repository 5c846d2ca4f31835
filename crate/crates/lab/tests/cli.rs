//! End-to-end runs of the `fpp` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpp_lab::meta::{ErrorRecord, Metadata};

fn fpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpp")).args(args).env("SOURCE_DATE_EPOCH", "1700000000").output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_cfg(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    fpp(&args)
}

fn metadata(out: &Path) -> Metadata {
    serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(fpp(&["teleport"]).status.code(), Some(2));
    assert_eq!(fpp(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_exits_2_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "spec = exponential(rate=-1)\nside = 10\n").unwrap();
    let out = dir.path().join("out");
    let o = run_cfg("sample", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: ErrorRecord = serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err.kind, "config_invalid");
    assert_eq!(err.exit_code, 2);

    std::fs::write(&cfg, "spec = point(value=1)\nside = 10\ncolour = red\n").unwrap();
    assert_eq!(run_cfg("sample", &cfg, &out, &[]).status.code(), Some(2));
}

#[test]
fn geodesic_run_writes_outputs_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cfg("geodesic", &configs().join("geodesic.cfg"), dir.path(), &["--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = metadata(dir.path());
    assert_eq!(meta.seed, 4);
    assert!(meta.seed_overridden);
    assert_eq!(meta.timestamp, 1_700_000_000);
    assert!(meta.outputs.iter().any(|f| f == "path.csv"));
    let path = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert!(path.lines().nth(1).unwrap().ends_with("0,0"));
    assert!(path.trim_end().ends_with("15,0"));
}

#[test]
fn metadata_echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    assert!(run_cfg("sample", &configs().join("sample.cfg"), &first, &["--seed", "9"]).status.success());
    let echo = dir.path().join("echo.cfg");
    std::fs::write(&echo, metadata(&first).config_text()).unwrap();
    let second = dir.path().join("b");
    assert!(run_cfg("sample", &echo, &second, &[]).status.success());
    assert_eq!(metadata(&first).config_hash, metadata(&second).config_hash);
    assert_eq!(std::fs::read(first.join("field.csv")).unwrap(), std::fs::read(second.join("field.csv")).unwrap());
}

#[test]
fn experiment_csv_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "experiment = all_light\nspec = exponential(rate=1)\nm = 1\nn = 4, 8\nreplicas = 20\nseed = 2\n")
        .unwrap();
    let outs: Vec<PathBuf> = ["1", "3"]
        .iter()
        .map(|t| {
            let out = dir.path().join(format!("t{t}"));
            assert!(run_cfg("experiment", &cfg, &out, &["--threads", t]).status.success());
            out
        })
        .collect();
    for f in ["results.csv", "extras.csv", "summary.csv", "replicas.csv"] {
        assert_eq!(std::fs::read(outs[0].join(f)).unwrap(), std::fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
    let results = std::fs::read_to_string(outs[0].join("results.csv")).unwrap();
    assert!(results.starts_with("experiment,n,replicas,estimate,stderr\n"));
    assert_eq!(results.lines().count(), 3);
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, cfg) in [("restricted", "restricted.cfg"), ("blackcube", "blackcube.cfg"), ("game", "game.cfg"), ("shortcut", "shortcut.cfg")] {
        let out = dir.path().join(sub);
        let o = run_cfg(sub, &configs().join(cfg), &out, &[]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!metadata(&out).outputs.is_empty());
    }
}
