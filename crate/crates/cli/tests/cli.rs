use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dqdmeas_core::io;

fn dqdmeas(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqdmeas"))
        .args(args)
        .current_dir(cwd)
        .env("DQDMEAS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, mode: &str, extra_grid: &str) -> std::path::PathBuf {
    let text = format!(
        r#"mode = "{mode}"
output_dir = "out"

[hamiltonian]
epsilon = 1.0
h_tunnel = 1.0

[detector]
i1 = 10.0
i2 = 11.0
s_i = 0.3333333333333333
e_charge = 0.01

[initial]
s11 = 1.0

[grid]
dt = 0.002
t_final = {extra_grid}
window = 0.02
seed = 4
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn scenario_outputs_are_byte_identical_and_reparse() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = dqdmeas(
            &["scenario", "fig1", "--seed", "7", "--out", out],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert!(stderr.contains("weak coupling"), "{stderr}");
    }
    for file in ["states.csv", "record.csv"] {
        let a = fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let (times, states) =
        io::read_states(fs::File::open(tmp.path().join("a/states.csv")).unwrap()).unwrap();
    assert_eq!(times.len(), 401);
    assert_eq!(states[0].s11(), 0.5);
    let record = io::read_record(fs::File::open(tmp.path().join("a/record.csv")).unwrap()).unwrap();
    assert_eq!(record.len(), 400);

    let other = dqdmeas(
        &["scenario", "fig1", "--seed", "8", "--out", "c"],
        tmp.path(),
    );
    assert!(other.status.success());
    assert_ne!(
        fs::read(tmp.path().join("a/record.csv")).unwrap(),
        fs::read(tmp.path().join("c/record.csv")).unwrap()
    );
}

#[test]
fn missing_key_fails_with_its_name() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "trajectory", "1.0");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("window = 0.02\n", "");
    fs::write(&path, text).unwrap();
    let o = dqdmeas(&["run", path.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));

    let o = dqdmeas(&["scenario", "fig9"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn validity_failures_are_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "trajectory", "0.5");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("i2 = 11.0", "i2 = 14.0");
    fs::write(&path, text).unwrap();
    let o = dqdmeas(&["validate", path.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("WARNING"));
    let o = dqdmeas(&["run", path.to_str().unwrap()], tmp.path());
    assert!(o.status.success());
}

#[test]
fn master_and_ensemble_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "master", "4.0");
    assert!(dqdmeas(&["run", path.to_str().unwrap()], tmp.path())
        .status
        .success());
    let (_, master) =
        io::read_states(fs::File::open(tmp.path().join("out/master.csv")).unwrap()).unwrap();

    let path = write_config(tmp.path(), "ensemble:10000", "4.0");
    let o = dqdmeas(&["run", path.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows =
        io::read_ensemble(fs::File::open(tmp.path().join("out/ensemble.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), master.len());
    for (k, row) in rows.iter().enumerate().step_by(20).skip(1) {
        let m = &master[k];
        for (mean, var, target) in [
            (row[1], row[2], m.s11()),
            (row[3], row[4], m.s12_re()),
            (row[5], row[6], m.s12_im()),
        ] {
            let se = (var / 10_000.0).sqrt();
            assert!(
                (mean - target).abs() <= 4.0 * se,
                "t = {}: {mean} vs {target}",
                row[0]
            );
        }
    }
    let h =
        io::read_histogram(fs::File::open(tmp.path().join("out/currents.csv")).unwrap()).unwrap();
    assert!(h.total() > 9_900);
    assert!(tmp.path().join("out/localization.csv").exists());
}

#[test]
fn reconstruct_mode_replays_a_record() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "trajectory", "1.0");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("window = 0.02", "window = 0.002");
    fs::write(&path, &text).unwrap();
    assert!(dqdmeas(&["run", path.to_str().unwrap()], tmp.path())
        .status
        .success());
    fs::rename(
        tmp.path().join("out/record.csv"),
        tmp.path().join("rec.csv"),
    )
    .unwrap();
    let text = text.replace("mode = \"trajectory\"", "mode = \"reconstruct:rec.csv\"");
    fs::write(&path, text).unwrap();
    let o = dqdmeas(&["run", path.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, a) =
        io::read_states(fs::File::open(tmp.path().join("out/states.csv")).unwrap()).unwrap();
    let (_, b) =
        io::read_states(fs::File::open(tmp.path().join("out/reconstructed.csv")).unwrap()).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x.s11() - y.s11()).abs() <= 1e-10);
        assert!((x.s12() - y.s12()).norm() <= 1e-10);
    }
}

#[test]
fn steer_demo_moves_electron_to_dot1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dqdmeas(&["scenario", "steer-demo", "--out", "s"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("s/steer.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), dqdmeas_cli::runner::STEER_HEADER);
    let values: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(values[4] >= 1.0 - 1e-8);
    // Re-check with the detector on: the current sits at I1 = 10.
    assert!((values[5] - 10.0).abs() < 0.5, "{}", values[5]);
}

#[test]
fn printed_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dqdmeas(&["scenario", "fig2a", "--print-config"], tmp.path());
    assert!(o.status.success());
    let cfg = dqdmeas_cli::RunConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, dqdmeas_cli::scenario("fig2a").unwrap());
}
