use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn roughflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn gamma_above_hurst_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = roughflow(&[
        "lift",
        "--hurst",
        "0.3",
        "--gamma",
        "0.35",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gamma < H"), "{err}");
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn continuity_requires_the_hurst_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let o = roughflow(&[
        "continuity",
        "--hurst",
        "0.3",
        "--gamma",
        "0.28",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Hurst constraint"));
}

#[test]
fn malformed_values_are_config_errors() {
    let o = roughflow(&["flow", "--grid-k", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid-k"));
    let o = roughflow(&["continuity", "--eps-ladder", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = roughflow(&[
            "integrate",
            "--grid-k",
            "6",
            "--seed",
            "9",
            "--out",
            &out_arg(dir.path()),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["integrate.csv", "integrate.json"] {
        let (x, y) = (
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
        );
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("res");
    fs::write(
        &cfg,
        format!(
            "# sample run\nhurst = 0.4\ngamma = 0.35\ngrid-k = 5\nseed = 3\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = roughflow(&[
        "sample-fbm",
        "--config",
        cfg.to_str().unwrap(),
        "--grid-k",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("sample-fbm.json")).unwrap()).unwrap();
    assert_eq!(report["H"], 0.4);
    assert_eq!(report["seed"], 3);
    assert_eq!(report["grid_k"], 4);
    let csv = fs::read_to_string(out.join("sample-fbm.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 17, "{csv}");
}
