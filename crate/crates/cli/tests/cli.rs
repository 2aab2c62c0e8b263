use std::fs;
use std::path::Path;
use std::process::Command;

fn qkr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qkr"))
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.toml");
    fs::write(
        &path,
        "[physics]\nn_sites = 256\n\n[sweep]\nn_points = 2\nn_realizations = 2\nn_kicks = 10\n\n\
         [classical]\nn_trajectories = 200\nn_kicks = 200\n\n\
         [phase_diagram]\nk_min = 4.0\nk_max = 4.0\nk_step = 1.0\neps_min = 0.1\neps_max = 0.1\neps_step = 0.1\n\
         n_kicks = 200\nn_realizations = 4\n",
    )
    .unwrap();
    path
}

#[test]
fn sweep_writes_dataset_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    for (name, workers) in [("a", "1"), ("b", "2")] {
        let status = qkr()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(name))
            .env("QKR_WORKERS", workers)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = tmp.path().join("a");
    for f in [
        "point_000_timeseries.csv",
        "point_001_lambda.csv",
        "index.csv",
        "manifest.tsv",
        "config.toml",
    ] {
        assert!(a.join(f).exists(), "{f}");
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn evolve_single_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = qkr()
        .args(["evolve", "-k", "5", "-e", "0.2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("e"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ts = fs::read_to_string(tmp.path().join("e/timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,pi0,pi0_err,pi0_inv_sq,p2\n"));
    assert_eq!(ts.lines().count(), 12);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[sweep]\nk_start = 1.0\n").unwrap();
    let status = qkr()
        .args(["sweep", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    fs::write(&bad, "[sweep]\nno_such_key = 1\n").unwrap();
    let status = qkr()
        .args(["sweep", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = qkr()
        .args(["sweep", "--preset", "nonsense", "--out"])
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn phase_diagram_and_classical_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = qkr()
        .args(["phase-diagram", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("pd"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let grid = fs::read_to_string(tmp.path().join("pd/phase_diagram.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);
    assert!(
        grid.lines().nth(1).unwrap().ends_with(",localized"),
        "{grid}"
    );

    let out = qkr()
        .args(["classical-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("cl"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("cl/classical_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn fit_reads_xi_table() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("xi.csv");
    let mut text = String::from("K,xi,branch\n");
    for i in 0..20 {
        let k = 4.0 + 5.0 * i as f64 / 19.0;
        let inv = (k - 6.6f64).abs().powf(1.6) + 0.1;
        text.push_str(&format!("{k},{},x\n", 1.0 / inv));
    }
    fs::write(&path, text).unwrap();
    let out = qkr().arg("fit").arg(&path).output().unwrap();
    assert!(out.status.success());
    let report = String::from_utf8(out.stdout).unwrap();
    let get = |key: &str| -> f64 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("k_c") - 6.6).abs() < 1e-6);
    assert!((get("nu") - 1.6).abs() < 1e-6);
}
