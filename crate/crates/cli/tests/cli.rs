use std::path::Path;
use std::process::{Command, Output};

fn aclab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aclab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Short horizon on a coarse ladder so each command runs in about a second.
const SHORT: [&str; 6] = ["--override", "T=0.05", "--override", "snapshots=4", "--override", "eps_list=[0.1,0.08,0.07,0.06]"];

#[test]
fn profile_check_writes_tables_with_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = aclab(dir.path(), &["profile-check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = read(&dir.path().join("profile.csv"));
    let mut lines = profile.lines();
    assert_eq!(lines.next(), Some("# optimal profile samples"));
    assert!(lines.next().unwrap().starts_with("# units:"));
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next(), Some("z,theta0,theta0_prime,tanh_error"));
    let check = read(&dir.path().join("profile_check.csv"));
    let values: Vec<f64> = check.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(values[2] <= 1e-8, "residual {}", values[2]);
    assert!(values[5] <= 1e-6, "sigma error {}", values[5]);
}

#[test]
fn simulate_writes_snapshots_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = aclab(dir.path(), &["--override", "eps=0.08", "--override", "T=0.02", "--override", "snapshots=2", "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read(&dir.path().join("trajectory.csv"));
    let rows: Vec<&str> = traj.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() >= 2);
    for row in rows {
        let file = row.rsplit(',').next().unwrap();
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let cfg = read(&dir.path().join("config.json"));
    assert!(cfg.contains("\"eps\": 0.08"));
}

#[test]
fn sweep_then_rates_reproduces_fits() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SHORT.to_vec();
    args.extend(["--workers", "2", "sweep"]);
    let out = aclab(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["snapshots.csv", "summary.csv", "rates.csv"] {
        assert!(read(&dir.path().join(f)).contains("# config_hash: "), "{f}");
    }
    let first = read(&dir.path().join("rates.csv"));
    let mut args = SHORT.to_vec();
    args.push("rates");
    assert!(aclab(dir.path(), &args).status.success());
    assert_eq!(first, read(&dir.path().join("rates.csv")));
}

#[test]
fn functional_compare_has_integrated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SHORT.to_vec();
    args.push("functional-compare");
    let out = aclab(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("functionals.csv"));
    assert!(text.contains("eps,theta,t,h_eps,h_eps_A,limit_stretched,limit_sharp,gap_stretched,gap_sharp"));
    let integrated = text.lines().filter(|l| l.split(',').nth(2) == Some("")).count();
    assert_eq!(integrated, 4);
}

#[test]
fn short_ladder_is_rejected_by_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = aclab(dir.path(), &["--override", "eps_list=[0.1,0.08]", "sweep"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));
}

#[test]
fn bad_override_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = aclab(dir.path(), &["--override", "no_such_key=1", "profile-check"]);
    assert!(!out.status.success());
}

#[test]
fn config_file_with_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,y\n");
    for k in 0..128 {
        let a = std::f64::consts::TAU * k as f64 / 128.0;
        csv.push_str(&format!("{},{}\n", 0.5 + 0.2 * a.cos(), 0.5 + 0.15 * a.sin()));
    }
    std::fs::write(dir.path().join("ellipse.csv"), csv).unwrap();
    let cfg = r#"{
        "eps": 0.08, "theta": 0, "m0": 0.05, "delta": 0.1, "T": 0.02, "snapshots": 2,
        "velocity": {"kind": "zero"},
        "testfield": {"center": [0.5, 0.5], "halfwidth": 0.3, "amplitude": 1.0},
        "initial_interface": {"file": "ellipse.csv"}
    }"#;
    std::fs::write(dir.path().join("run.json"), cfg).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aclab"))
        .arg("--config")
        .arg(dir.path().join("run.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("motion-law")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("out/motion_law.csv"));
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last < 2.0 * 0.08, "Hausdorff {last}");
}
