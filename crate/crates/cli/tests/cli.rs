use std::path::Path;
use std::process::Command;

use certkit::config::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_certkit");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn certkit(args: &[&str], dir: &Path) -> Run {
    certkit_env(args, dir, &[])
}

fn certkit_env(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Run {
    let out = Command::new(BIN).args(args).envs(env.iter().copied()).current_dir(dir).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write_cfg(dir: &Path, name: &str, edit: impl FnOnce(&mut RunConfig)) {
    let mut cfg = RunConfig::example();
    edit(&mut cfg);
    std::fs::write(dir.join(name), cfg.to_toml()).unwrap();
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn trajectory_header_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "short.cfg", |c| c.numerics.t_end = 0.5);
    let run = certkit(&["simulate", "--config", "short.cfg", "--out", "o"], dir.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = std::fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(text.starts_with("t,u_l2,x_norm,V,x_bound,u_bound\n"));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 51);
}

#[test]
fn zero_data_writes_zero_columns() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "zero.cfg", |c| {
        c.numerics.t_end = 1.0;
        c.disturbance.d_inf = 0.0;
        c.initial.x0 = vec![0.0];
        c.initial.phi = certkit::config::ProfileSource::Builtin(certkit_core::functions::Profile::constant(0.0));
    });
    let run = certkit(&["simulate", "--config", "zero.cfg", "--out", "o"], dir.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&dir.path().join("o/trajectory.csv"));
    for row in rows {
        for v in &row[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{row:?}");
        }
    }
}

#[test]
fn forced_infeasibility_names_the_failed_condition() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "s20.cfg", |c| c.nonlinearity.sigma = 20.0);
    let run = certkit(&["certify", "--config", "s20.cfg", "--out", "o"], dir.path());
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("omega_positive"), "{}", run.stderr);
    let report = std::fs::read_to_string(dir.path().join("o/certify.report.toml")).unwrap();
    assert!(report.contains("omega_positive = \"fail\""));
}

#[test]
fn missing_block_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = RunConfig::example().to_toml().lines().filter(|l| !l.starts_with("P =")).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join("noP.cfg"), body).unwrap();
    let run = certkit(&["certify", "--config", "noP.cfg"], dir.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("`P`"), "{}", run.stderr);
}

#[test]
fn reproduce_example_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = certkit(&["reproduce-example", "--out", "o"], dir.path());
    let first = std::fs::read(dir.path().join("o/reproduce-example.report.toml")).unwrap();
    let b = certkit(&["reproduce-example", "--out", "o"], dir.path());
    let second = std::fs::read(dir.path().join("o/reproduce-example.report.toml")).unwrap();
    assert_eq!((a.code, b.code), (0, 0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first, second);
    let text = std::fs::read_to_string(dir.path().join("o/reproduce-example.report.txt")).unwrap();
    assert!(text.contains("kappa") && text.contains("0.021367"));
}

#[test]
fn sweep_over_p_finds_the_example_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let run = certkit(&["sweep", "--param", "p", "--grid", "0.5,1,2", "--out", "o"], dir.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("o/sweep.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 3);
    let one = rows.iter().find(|r| r[col("value")] == "1").unwrap();
    assert_eq!(one[col("feasible")], "true");
    let omega: f64 = one[col("omega")].parse().unwrap();
    assert!((omega - 13.992949).abs() < 1e-5);
}

#[test]
fn sweep_rows_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--param", "d", "--grid", "-6,-5,-4,-3,0,2"];
    let one = certkit_env(&[&args[..], &["--out", "a"]].concat(), dir.path(), &[("CERTKIT_THREADS", "1")]);
    let many = certkit_env(&[&args[..], &["--out", "b"]].concat(), dir.path(), &[("CERTKIT_THREADS", "4")]);
    assert_eq!((one.code, many.code), (0, 0));
    let a = std::fs::read(dir.path().join("a/sweep.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/sweep.csv")).unwrap();
    assert_eq!(a, b);
}

/// `P12 = 16 - 16 cos((z - 1/2) / 2) / cos(1/4)` solves `P12'' + P12 / 4 = 4` with zero ends.
fn example_p12_l2() -> f64 {
    let f = |z: f64| {
        let v = 16.0 - 16.0 * ((z - 0.5) / 2.0).cos() / 0.25f64.cos();
        v * v
    };
    // Simpson on 20000 panels
    let n = 20000;
    let h = 1.0 / n as f64;
    let s: f64 = (0..=n).map(|i| f(i as f64 * h) * if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (s * h / 3.0).sqrt()
}

#[test]
fn omega_verdict_flips_where_omega_changes_sign() {
    let sigma_star = std::f64::consts::PI.powi(2) - 5.0 * example_p12_l2();
    let dir = tempfile::tempdir().unwrap();
    let offsets = [-1e-3, -1e-4, -1e-6, 1e-6, 1e-4, 1e-3];
    let grid: Vec<String> = offsets.iter().map(|o| (sigma_star + o).to_string()).collect();
    let run = certkit(&["sweep", "--param", "sigma", "--grid", &grid.join(","), "--out", "o"], dir.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("o/sweep.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (row, off) in rows.iter().zip(offsets) {
        let verdict = &row[col("omega_positive")];
        assert_eq!(verdict, if off < 0.0 { "pass" } else { "fail" }, "offset {off}");
        let omega: f64 = row[col("omega")].parse().unwrap();
        assert!((omega + 2.0 * off).abs() < 1e-8, "offset {off}: omega {omega}");
        // Xi needs omega above L^2 |P12|^2 / lmin(Omega), so feasibility is already gone here
        assert_eq!(row[col("feasible")], "false");
    }
}

#[test]
fn feasibility_flips_where_xi_loses_definiteness() {
    let p12 = example_p12_l2();
    let big_omega = 0.183766;
    // lmin(Xi) = 0 when omega lmin(Omega) = L^2 |P12|^2
    let omega_edge = p12 * p12 / big_omega;
    let sigma_edge = std::f64::consts::PI.powi(2) - 5.0 * p12 - omega_edge / 2.0;
    let dir = tempfile::tempdir().unwrap();
    let grid = format!("{},{}", sigma_edge - 1e-3, sigma_edge + 1e-3);
    let run = certkit(&["sweep", "--param", "sigma", "--grid", &grid, "--out", "o"], dir.path());
    assert_eq!(run.code, 0);
    let (header, rows) = read_csv(&dir.path().join("o/sweep.csv"));
    let col = header.iter().position(|h| h == "feasible").unwrap();
    assert_eq!(rows[0][col], "true");
    assert_eq!(rows[1][col], "false");
}

#[test]
fn sweep_rejects_unknown_parameters_and_empty_grids() {
    let dir = tempfile::tempdir().unwrap();
    let run = certkit(&["sweep", "--param", "gamma", "--grid", "1,2"], dir.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("gamma"));
    assert_eq!(certkit(&["sweep", "--param", "sigma", "--grid", ""], dir.path()).code, 1);
    assert_eq!(certkit(&["sweep", "--param", "sigma", "--grid", "1,x"], dir.path()).code, 1);
}

#[test]
fn audit_passes_on_the_example() {
    let dir = tempfile::tempdir().unwrap();
    let run = certkit(&["audit", "--out", "o", "--seed", "7"], dir.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report = std::fs::read_to_string(dir.path().join("o/audit.report.toml")).unwrap();
    assert!(!report.contains("= \"violation\""));
    assert!(report.contains("\"sign condition\" = \"pass\""), "{report}");
}

#[test]
fn audit_reports_a_witness_for_a_square() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "sq.cfg", |c| {
        c.nonlinearity.f.lipschitz_part = certkit_core::functions::ScalarFn::Square { coef: 1.0 };
    });
    let run = certkit(&["audit", "--config", "sq.cfg", "--out", "o"], dir.path());
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("f0 Lipschitz at ["), "{}", run.stderr);
    assert!(run.stdout.contains("witness_input"));
}

#[test]
fn audit_needs_samples() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "none.cfg", |c| c.numerics.audit_samples = 0);
    assert_eq!(certkit(&["audit", "--config", "none.cfg"], dir.path()).code, 1);
}

#[test]
fn divergence_exits_with_three_and_a_time_stamp() {
    let dir = tempfile::tempdir().unwrap();
    write_cfg(dir.path(), "div.cfg", |c| {
        c.system.c = vec![vec![-60.0]];
        c.numerics.scheme = certkit_core::galerkin_sim::Scheme::ImexEuler;
        c.numerics.dt = 0.1;
    });
    let run = certkit(&["simulate", "--config", "div.cfg", "--out", "o"], dir.path());
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("diverged at t = "), "{}", run.stderr);
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(certkit(&["--help"], dir.path()).code, 0);
    assert_eq!(certkit(&["--version"], dir.path()).code, 0);
    assert_eq!(certkit(&[], dir.path()).code, 1);
}
