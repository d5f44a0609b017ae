use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_blowup-lab");

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("BLOWUP_LAB_THREADS").output().unwrap()
}

fn lab(sub: &str, config: &str, out: &str, dir: &Path) -> Output {
    let cfg = write_config(dir, &format!("{out}.json"), config);
    run(&[sub, "--config", cfg.to_str().unwrap(), "--out", out], dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (json, field) in [
        (r#"{"p": 3, "typo": 1}"#, "typo"),
        (r#"{"p": 4}"#, "p"),
        (r#"{"k": 4}"#, "p"),
        (r#"{"p": 3, "delta": "big"}"#, "delta"),
        (r#"{"p": 3, "h": -0.1}"#, "h"),
        (r#"{"p": 3, "data": "sine"}"#, "data"),
        (r#"{"p": 3, "nested": {"a": 1}}"#, "nested"),
        (r#"{"p": 3, "delta": 0.05, "amplitude": 0.01}"#, "amplitude"),
    ] {
        let o = lab("fixed-point", json, "bad", tmp.path());
        assert_eq!(o.status.code(), Some(2), "{json}: {}", stderr(&o));
        assert!(stderr(&o).contains(&format!("`{field}`")), "{json}: {}", stderr(&o));
    }
    let o = lab("cross-validate", r#"{"p": 3, "T": 2, "data": "zero"}"#, "t2", tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`T`"));
    let o = run(&["spectrum"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn large_delta_is_a_contraction_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("fixed-point", r#"{"p": 3, "delta": 0.9}"#, "big", tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = report(&tmp.path().join("big"));
    assert_eq!(r["status"], "contraction-failure");
    assert!(r["results"]["contraction_ratios"].as_array().unwrap().iter().any(|v| v.as_f64().unwrap() > 0.5));
}

#[test]
fn under_resolved_blowup_run_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("blowup-rate", r#"{"p": 3, "dr": 0.3}"#, "coarse", tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(report(&tmp.path().join("coarse"))["status"], "under-resolved");
}

#[test]
fn spectrum_tables_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("spectrum", r#"{"p": 3}"#, "spectra", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("spectra");
    let mut rdr = csv::Reader::from_path(out.join("spectrum.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["re", "im", "status", "j", "branch", "analytic", "error", "residual"]);
    let mut found = Vec::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let mantissa = rec[0].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{}", &rec[0]);
        if &rec[2] == "retained" && !rec[3].is_empty() {
            let err: f64 = rec[6].parse().unwrap();
            assert!(err < 1e-10, "{rec:?}");
            found.push((rec[3].to_string(), rec[4].to_string()));
        }
    }
    for want in [("0", "plus"), ("1", "plus"), ("0", "minus"), ("1", "minus")] {
        assert!(found.contains(&(want.0.into(), want.1.into())), "missing {want:?} in {found:?}");
    }
    let r = report(&out);
    assert_eq!(r["command"], "spectrum");
    assert_eq!(r["inputs"]["k"], "auto");
    assert_eq!(r["resolved"]["k"], 4);
    let v = run(&["validate", "--out", "spectra"], tmp.path());
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stdout));
}

fn without_timestamp(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("report.json")).unwrap().lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn reruns_are_identical_up_to_the_timestamp() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "fp.json", r#"{"p": 3, "delta": 0.05, "data": "random", "amplitude": 1e-7, "seed": 7}"#);
    let a = run(&["fixed-point", "--config", cfg.to_str().unwrap(), "--out", "a"], tmp.path());
    assert!(a.status.success(), "{}", stderr(&a));
    let b = Command::new(BIN)
        .args(["fixed-point", "--config", cfg.to_str().unwrap(), "--out", "b"])
        .current_dir(tmp.path())
        .env("BLOWUP_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(b.status.success(), "{}", stderr(&b));
    let (da, db) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(without_timestamp(&da), without_timestamp(&db));
    assert_eq!(std::fs::read(da.join("trajectory.csv")).unwrap(), std::fs::read(db.join("trajectory.csv")).unwrap());
    let r = report(&da);
    assert_eq!(r["status"], "ok");
    assert_eq!(r["results"]["converged"], true);
    assert_eq!(r["results"]["uniqueness"]["passed"], true);
}

#[test]
fn zero_data_has_zero_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("fixed-point", r#"{"p": 3, "delta": 0.05, "data": "zero"}"#, "z", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("z"));
    assert_eq!(r["results"]["alpha"].as_f64(), Some(0.0));
    assert_eq!(r["results"]["iterations"], 1);

    let o = lab("cross-validate", r#"{"p": 3, "delta": 0.05, "data": "zero"}"#, "zc", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("zc"));
    assert_eq!(r["results"]["max_relative_difference"].as_f64(), Some(0.0));
    assert!(r["results"]["gauge_demonstration"]["skipped"].is_string());
}

#[test]
fn cross_validation_agrees_and_removes_the_gauge_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("cross-validate", r#"{"p": 3, "delta": 0.05, "data": "mixed"}"#, "cv", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("cv"));
    assert!(r["results"]["max_relative_difference"].as_f64().unwrap() < 1e-3);
    let g = &r["results"]["gauge_demonstration"];
    assert!((g["uncorrected_rate"].as_f64().unwrap() - 1.0).abs() < 0.1, "{g}");
    assert!((g["corrected_rate"].as_f64().unwrap() + 1.0).abs() < 0.05, "{g}");
    assert!(run(&["validate", "--out", "cv"], tmp.path()).status.success());
}

#[test]
fn linear_mode_decays_at_its_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("evolve-linear", r#"{"p": 3, "data": "mode", "mode": "1+", "tau_max": 8}"#, "m", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rate = report(&tmp.path().join("m"))["results"]["rate"].as_f64().unwrap();
    assert!((rate + 1.0).abs() < 1e-6, "{rate}");
    let o = lab("evolve-linear", r#"{"p": 3, "tau_max": 60}"#, "long", tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`tau_max`"));
}

#[test]
fn sampled_data_file_is_fitted_and_rescaled() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("rho,u1,u2\n");
    for i in 0..=200 {
        let r = i as f64 / 200.0;
        text += &format!("{r},{},{}\n", r * (-r * r).exp(), (-r * r).exp());
    }
    std::fs::write(tmp.path().join("u.csv"), text).unwrap();
    let o = lab("fixed-point", r#"{"p": 3, "delta": 0.05, "data_path": "u.csv", "amplitude": 1e-4}"#, "f", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let norm = report(&tmp.path().join("f"))["resolved"]["data_norm"].as_f64().unwrap();
    assert!((norm - 1e-4).abs() < 1e-12, "{norm}");

    std::fs::write(tmp.path().join("bad.csv"), "r,u1,u2\n0,0,0\n").unwrap();
    let o = lab("fixed-point", r#"{"p": 3, "delta": 0.05, "data_path": "bad.csv"}"#, "g", tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`data_path`"));
}

#[test]
fn blowup_rate_of_the_exact_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("blowup-rate", r#"{"p": 3, "r_max": 3, "t_limit": 2, "snapshot_every": 500}"#, "b", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&tmp.path().join("b"));
    assert_eq!(r["status"], "ok");
    assert!(r["results"]["relative_exponent_error"].as_f64().unwrap() < 5e-3);
    assert!(r["results"]["blowup_time_error"].as_f64().unwrap() < 1e-3);
    assert!(run(&["validate", "--out", "b"], tmp.path()).status.success());
}

#[test]
fn hardy_suites_pass_at_default_sample_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab("hardy", r#"{"p": 3, "seed": 3}"#, "h", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv::Reader::from_path(tmp.path().join("h/hardy.csv")).unwrap().records().count();
    assert_eq!(rows, 15);
}

#[test]
fn jobs_run_each_config_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "three.json", r#"{"p": 3}"#);
    let b = write_config(tmp.path(), "five.json", r#"{"p": 5}"#);
    let o = run(&["spectrum", "--config", a.to_str().unwrap(), "--config", b.to_str().unwrap(), "--jobs", "2", "--out", "many"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&tmp.path().join("many/three"))["resolved"]["k"], 4);
    assert_eq!(report(&tmp.path().join("many/five"))["resolved"]["k"], 3);
    assert!(run(&["validate", "--out", "many"], tmp.path()).status.success());

    // a damaged table is reported with exit code 1
    let table = tmp.path().join("many/five/spectrum.csv");
    let text = std::fs::read_to_string(&table).unwrap().replacen("e0,", "e0x,", 1);
    std::fs::write(&table, text).unwrap();
    let v = run(&["validate", "--out", "many"], tmp.path());
    assert_eq!(v.status.code(), Some(1));
    assert!(stderr(&v).contains("spectrum.csv"));
}
