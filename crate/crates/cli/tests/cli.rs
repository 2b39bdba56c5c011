use std::path::Path;
use std::process::{Command, Output};

use gravcat_cli::config::{parse_config, to_config_text, Mode, Preset, Solver};
use gravcat_core::{GravcatParams, UnitSystem};

fn gravcat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravcat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn mesoscopic_preset_alone_is_complete() {
    let cfg = parse_config("preset = mesoscopic\n").unwrap();
    assert_eq!(cfg.preset, Some(Preset::Mesoscopic));
    assert_eq!(cfg.params, GravcatParams::mesoscopic());
    assert_eq!(cfg.params.units, UnitSystem::Si);
    let k = cfg.params.constants();
    let tau = cfg.params.entanglement_time(&k).unwrap();
    assert!((0.9..=1.1).contains(&tau), "{tau}");
}

#[test]
fn fig2_preset_values() {
    let p = parse_config("preset = fig2").unwrap().params;
    assert_eq!(p.units, UnitSystem::Natural);
    assert_eq!((p.epsilon, p.e_ref, p.omega, p.t_qg, p.theta), (1.0, 2.0, Some(0.5), 1.0, 0.0));
}

#[test]
fn explicit_keys_override_preset() {
    let cfg = parse_config("preset = fig2\nt_qg = 0\nsolver = analytic\nmode = evolve\n").unwrap();
    assert_eq!(cfg.params.t_qg, 0.0);
    assert_eq!(cfg.solver, Solver::Analytic);
    assert_eq!(cfg.mode, Mode::Evolve);
}

#[test]
fn non_positive_kinetic_operator_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = "units = si\nmass = 1e-14 kg\nepsilon = 2 J\ne_ref = 1 J\nn = 1\nt_qg = 0 s\nomega = 1 J\n";
    std::fs::write(dir.path().join("bad.cfg"), text).unwrap();
    let out = gravcat(dir.path(), &["evolve", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 4"), "{msg}");
    assert!(msg.contains("kinetic operator not positive-definite"), "{msg}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["timescales", "--preset", "mesoscopic", "--mass", "1"],
        &["timescales", "--preset", "mesoscopic", "--mass", "1 m"],
        &["timescales", "--preset", "fig2", "--epsilon", "1 J"],
        &["warp", "--preset", "fig2"],
    ];
    for args in cases {
        let out = gravcat(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
    std::fs::write(dir.path().join("unknown.cfg"), "preset = fig2\ncolour = red\n").unwrap();
    let out = gravcat(dir.path(), &["--config", "unknown.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn missing_required_key_is_reported() {
    let err = parse_config("units = si\nmass = 1e-14 kg\n").unwrap_err();
    assert!(err.message.contains("epsilon"), "{err}");
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(dir.path(), &["--config", "absent.cfg"]);
    assert_eq!(out.status.code(), Some(4));
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let out = gravcat(dir.path(), &["timescales", "--preset", "fig2", "-o", "blocker/t.csv"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn solver_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(dir.path(), &["evolve", "--preset", "fig2", "--solver", "analytic"]);
    assert_eq!(out.status.code(), Some(2));
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn mesoscopic_timescales_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(dir.path(), &["timescales", "--preset", "mesoscopic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("timescales.csv"));
    assert_eq!(header, ["quantity", "value", "unit"]);
    let value = |q: &str| -> f64 {
        let row = rows.iter().find(|r| r[0] == q).unwrap();
        assert_eq!(row[2], "s");
        row[1].parse().unwrap()
    };
    let tau_e = value("tau_e");
    assert!((0.9..=1.1).contains(&tau_e), "{tau_e}");
    let tau_d1 = value("tau_d_1");
    assert!((tau_d1 / 2e19 - 1.0).abs() <= 0.05, "{tau_d1}");
    for q in ["tau_d_2", "tau_d_3", "tau_d_pi", "tau_d_gravcat"] {
        assert!(value(q) > 0.0);
    }
}

#[test]
fn energy_scale_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(dir.path(), &["energy_scale", "--preset", "mesoscopic", "--tau-target", "1 s"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("energy_scale.csv"));
    assert_eq!(header, ["n", "energy", "unit", "tau_target"]);
    let quoted: [f64; 3] = [2e-15, 1e-6, 1e-3];
    assert_eq!(rows.len(), 3);
    for (row, q) in rows.iter().zip(quoted) {
        let e: f64 = row[1].parse().unwrap();
        // quoted to one significant figure
        assert!((e.log10() - q.log10()).abs() <= 0.15, "n = {}: {e} vs {q}", row[0]);
    }
}

#[test]
fn rk4_matches_analytic_on_fig2() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["evolve", "--preset", "fig2", "--t-qg", "0", "--t-max", "10", "--dt", "0.001"];
    let mut a: Vec<&str> = common.to_vec();
    a.extend(["--solver", "rk4", "-o", "rk4.csv"]);
    let mut b: Vec<&str> = common.to_vec();
    b.extend(["--solver", "analytic", "-o", "analytic.csv"]);
    assert!(gravcat(dir.path(), &a).status.success());
    assert!(gravcat(dir.path(), &b).status.success());
    let (ha, ra) = read_csv(&dir.path().join("rk4.csv"));
    let (hb, rb) = read_csv(&dir.path().join("analytic.csv"));
    assert_eq!(ha, hb);
    assert_eq!(ra.len(), rb.len());
    assert_eq!(ra.len(), 10_001);
    let mut worst = 0.0_f64;
    for (x, y) in ra.iter().zip(&rb) {
        for (u, v) in x.iter().zip(y) {
            let (u, v): (f64, f64) = (u.parse().unwrap(), v.parse().unwrap());
            worst = worst.max((u - v).abs());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn trajectories_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str, seed: &'static str| {
        vec![
            "trajectories", "--preset", "fig2", "--n-traj", "130", "--t-max", "2", "--record-every", "50",
            "--seed", seed, "-o", o,
        ]
    };
    for (o, s) in [("a.csv", "5"), ("b.csv", "5"), ("c.csv", "6")] {
        let out = gravcat(dir.path(), &args(o, s));
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    let (header, rows) = read_csv(&dir.path().join("a.csv"));
    assert_eq!(header.len(), 19);
    assert_eq!(header[11], "se_rho11");
    assert!(rows.iter().skip(1).all(|r| r[column(&header, "se_re_rho14")].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn sidecar_reruns_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(
        dir.path(),
        &["evolve", "--preset", "fig2", "--t-max", "3", "--dt", "0.002", "--seed", "9", "-o", "run.csv"],
    );
    assert!(out.status.success());
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    for key in ["version", "config_echo", "seed", "dt", "drift_counters", "wall_time", "rng"] {
        assert!(side.get(key).is_some(), "missing {key}");
    }
    assert_eq!(side["seed"], 9);
    assert_eq!(side["dt"], 0.002);
    assert_eq!(side["drift_counters"]["steps"], 1500);

    // the echoed config reproduces the same bytes
    let echo = side["config_echo"].as_str().unwrap();
    let cfg = parse_config(echo).unwrap();
    assert_eq!(to_config_text(&cfg), echo);
    std::fs::write(dir.path().join("echo.cfg"), echo.replace("run.csv", "again.csv")).unwrap();
    let out = gravcat(dir.path(), &["--config", "echo.cfg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("run.csv"), read("again.csv"));
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f.cfg"), "preset = fig2\nmode = timescales\nt_qg = 3\n").unwrap();
    let out = gravcat(dir.path(), &["--config", "f.cfg", "--t-qg", "1", "-o", "t.csv"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("t.csv"));
    let gravcat_row = rows.iter().find(|r| r[0] == "tau_d_gravcat").unwrap();
    // ħ²/(σ² B² t_QG) with B = (E−ε) − (E+ε) = −2
    let expected = 1.0 / (0.1_f64 * 0.1 * 4.0 * 1.0);
    let got: f64 = gravcat_row[1].parse().unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected, "{got}");
}

#[test]
fn sweep_and_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = gravcat(dir.path(), &["sweep", "--preset", "fig2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header, ["parameter", "value", "a_n", "max_concurrence", "t_at_max"]);
    let peaks: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");

    let out = gravcat(dir.path(), &["reproduce", "--preset", "fig2", "-o", "figs"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for panel in ["a", "b", "c", "d"] {
        assert!(dir.path().join(format!("figs/panel_{panel}.csv")).is_file());
        assert!(dir.path().join(format!("figs/panel_{panel}.json")).is_file());
    }
    // populations equilibrate toward 1/2 under stochastic LIV
    let (h, rows) = read_csv(&dir.path().join("figs/panel_d.csv"));
    let last = rows.last().unwrap();
    let rho11: f64 = last[column(&h, "rho11")].parse().unwrap();
    assert!((rho11 - 0.5).abs() <= 0.05, "{rho11}");
}
