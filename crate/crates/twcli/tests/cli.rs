use std::fs;
use std::path::Path;
use std::process::Command;

use twcli::{exit, parse_config};

fn twlab(args: &[&str], config: &str, dir: &Path) -> i32 {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_twlab"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--quiet")
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn verify_succeeds_and_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "o");
    let code = twlab(&["verify", "--out", &out], "[chain]\nn = 4\n[sweep]\nn = [2, 3, 4]\n", dir.path());
    assert_eq!(code, exit::SUCCESS);
    for f in ["manifest.json", "checks.csv", "identities.csv"] {
        assert!(dir.path().join("o").join(f).is_file(), "{f}");
    }
    let checks = fs::read_to_string(dir.path().join("o/checks.csv")).unwrap();
    assert!(checks.starts_with("name,residual,threshold,passed\n"));
    assert!(!checks.contains(",false\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "command = \"roots\"\n[chain]\nn = 6\np = [0.0, -1.2]\nq_bar = [0.0, 0.8]\nxi = 1.0\n[sweep]\nn = [4, 6]\n";
    let (a, b) = (out_arg(dir.path(), "a"), out_arg(dir.path(), "b"));
    assert_eq!(twlab(&["roots", "--out", &a], cfg, dir.path()), exit::SUCCESS);
    assert_eq!(twlab(&["roots", "--out", &b], cfg, dir.path()), exit::SUCCESS);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 3);
    for name in names {
        if name == "manifest.json" {
            continue;
        }
        let x = fs::read(Path::new(&a).join(&name)).unwrap();
        let y = fs::read(Path::new(&b).join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
}

#[test]
fn config_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "o");
    for bad in [
        "[chain]\nn = 3\n",
        "[chain]\nn = 4\ncolour = 1\n",
        "[chain]\nn = 4\n[tolerances]\nbae = -1.0\n",
        "[chain\nn = 4\n",
    ] {
        assert_eq!(twlab(&["roots", "--out", &out], bad, dir.path()), exit::CONFIG_ERROR, "{bad}");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_twlab"))
        .args(["roots", "--config", "/nonexistent/twlab.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(exit::CONFIG_ERROR));
    let usage = Command::new(env!("CARGO_BIN_EXE_twlab")).arg("roots").output().unwrap();
    assert_eq!(usage.status.code(), Some(exit::CONFIG_ERROR));
}

#[test]
fn failing_check_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "o");
    let cfg = "[chain]\nn = 4\n[sweep]\nn = [4]\n[tolerances]\nhamiltonian = 1e-30\n";
    assert_eq!(twlab(&["verify", "--out", &out], cfg, dir.path()), exit::CHECK_FAILURE);
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path(), "o");
    let cfg = "[chain]\nn = 6\n[sweep]\nn = [6]\n[tolerances]\nbae_max_iter = 1\nbae = 1e-300\n";
    assert_eq!(twlab(&["bae", "--out", &out], cfg, dir.path()), exit::NON_CONVERGENCE);
}

#[test]
fn error_keys_name_the_field() {
    let e = parse_config("[chain]\nn = 4\neta = \"i\"\n").unwrap_err();
    assert_eq!(e.key, "chain.eta");
    let e = parse_config("command = \"roots\"\n[sweep]\nn = [4, 5]\n[chain]\nn = 4\n").unwrap_err();
    assert_eq!(e.key, "sweep.n");
}
