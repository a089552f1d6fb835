use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vertail::io::{
    read_joint_csv, read_metrics, read_platform_csv, write_joint_csv, write_platform_csv,
};
use vertail::Record;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn vertail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vertail"))
        .args(args)
        .env_remove("VERTAIL_CONFIG_DIR")
        .output()
        .expect("binary runs")
}

fn run_config(name: &str, out: &Path, extra: &[&str]) -> Vec<Record> {
    let config = configs().join(format!("{name}.toml"));
    let mut args = vec![
        "-q",
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend(extra);
    let o = vertail(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    read_metrics(&out.join(format!("{name}_metrics.toml"))).unwrap()
}

fn num(r: &Record, key: &str) -> f64 {
    r[key].as_float().unwrap_or_else(|| panic!("{key} missing"))
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).expect("stderr ends in a JSON record")
}

#[test]
fn maneuver_writes_schema_csv_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("maneuver", dir.path(), &["--dt", "2e-4"]);
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r["kind"].as_str(), Some("maneuver"));
    assert_eq!(r["target_reached"].as_bool(), Some(true));
    assert!(num(r, "t_settle_s") > 0.0 && num(r, "v_peak_deg_s") > 0.0);

    let csv = std::fs::read_to_string(dir.path().join("maneuver.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t_s,phi_rad,theta_rad,phidot_rad_s,thetadot_rad_s,P1_pa,P2_pa,P3_pa,P4_pa,P5_pa,tau_base_Nm,f_base_N"
    );
    // 0.6 s at 0.2 ms plus the initial sample.
    assert_eq!(csv.lines().count(), 1 + 3001);
}

#[test]
fn emitted_csvs_reparse_identically() {
    let dir = tempfile::tempdir().unwrap();
    run_config("cart", dir.path(), &["--dt", "5e-4"]);
    let joint = read_joint_csv(&dir.path().join("cart_joint.csv"), 5).unwrap();
    let cart = read_platform_csv(&dir.path().join("cart_cart.csv")).unwrap();
    let again = dir.path().join("again");
    std::fs::create_dir(&again).unwrap();
    write_joint_csv(&again.join("j.csv"), &joint, 5).unwrap();
    write_platform_csv(&again.join("c.csv"), &cart).unwrap();
    assert_eq!(read_joint_csv(&again.join("j.csv"), 5).unwrap(), joint);
    assert_eq!(read_platform_csv(&again.join("c.csv")).unwrap(), cart);
    assert_eq!(
        std::fs::read(dir.path().join("cart_cart.csv")).unwrap(),
        std::fs::read(again.join("c.csv")).unwrap()
    );
}

#[test]
fn pressure_sweep_settles_faster_at_higher_pressure() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("pressure_sweep", dir.path(), &["--dt", "2e-4"]);
    assert_eq!(records.len(), 6);
    let p: Vec<f64> = records.iter().map(|r| num(r, "pressure_bar")).collect();
    assert_eq!(p, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let t: Vec<f64> = records.iter().map(|r| num(r, "t_settle_s")).collect();
    assert!(t.windows(2).all(|w| w[1] < w[0]), "{t:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_config("mass_sweep", a.path(), &["--dt", "5e-4"]);
    run_config("mass_sweep", b.path(), &["--dt", "5e-4"]);
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        assert_eq!(
            std::fs::read(a.path().join(&n)).unwrap(),
            std::fs::read(b.path().join(&n)).unwrap()
        );
    }
}

#[test]
fn cart_turns_against_the_tail() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("cart", dir.path(), &["--dt", "2e-4"]);
    let r = &records[0];
    assert_eq!(r["opposite"].as_bool(), Some(true));
    assert!(num(r, "onset_alpha_acc_rad_s2") * num(r, "onset_tail_acc_rad_s2") < 0.0);
}

#[test]
fn ballistic_range_grows_with_pressure() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("ballistic", dir.path(), &["--dt", "2e-4"]);
    let range: Vec<f64> = records.iter().map(|r| num(r, "range_m")).collect();
    assert_eq!(range.len(), 5);
    assert!(range.windows(2).all(|w| w[1] > w[0]), "{range:?}");
}

#[test]
fn report_passes_single_maneuver_through() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("maneuver", dir.path(), &["--dt", "5e-4"]);
    let out = dir.path().join("rep");
    let metrics = dir.path().join("maneuver_metrics.toml");
    let o = vertail(&[
        "-q",
        "report",
        metrics.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(read_metrics(&out.join("report.toml")).unwrap(), records);
}

#[test]
fn report_appends_power_law_for_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_config("pressure_sweep", dir.path(), &["--dt", "5e-4"]);
    let out = dir.path().join("rep");
    let o = vertail(&[
        "report",
        dir.path().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let merged = read_metrics(&out.join("report.toml")).unwrap();
    assert_eq!(&merged[..records.len()], &records[..]);
    let power = merged
        .iter()
        .find(|r| {
            r["kind"].as_str() == Some("fit_power_law") && r["y"].as_str() == Some("t_settle_s")
        })
        .expect("power-law row");
    assert!(num(power, "exponent") < 0.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("fit_power_law"));
}

#[test]
fn report_of_empty_directory_is_no_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = vertail(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_record(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("no metrics files"));
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[scenario]\nkind = \"maneuver\"\n[pulse]\npeak_bar = 9.0\n",
    )
    .unwrap();
    let o = vertail(&[
        "run",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_record(&o);
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("peak_bar"));

    std::fs::write(&bad, "[scenario]\nkind = \"maneuver\"\ncolour = 1\n").unwrap();
    let o = vertail(&[
        "run",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let stiff = dir.path().join("stiff.toml");
    std::fs::write(
        &stiff,
        "[scenario]\nkind = \"maneuver\"\ndt_s = 0.002\n[soa]\ndamping_n_s_per_m = 5000.0\n",
    )
    .unwrap();
    let o = vertail(&[
        "run",
        stiff.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["error"], "numerical");
}

#[test]
fn config_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vertail"))
        .args([
            "-q",
            "run",
            "maneuver.toml",
            "--dt",
            "1e-3",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("VERTAIL_CONFIG_DIR", configs())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("maneuver_metrics.toml").exists());
}
