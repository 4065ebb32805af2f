use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinsync(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsync"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn sweep_output_is_bit_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "sweep", "--spin", "3", "--shift", "0", "--shift", "-1", "--signal", "eps2", "--points", "13", "--out", out,
        ]
    };
    assert!(spinsync(&args("a"), dir.path()).status.success());
    assert!(spinsync(&args("b"), dir.path()).status.success());
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 2);
    for name in names {
        let a = fs::read_to_string(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read_to_string(dir.path().join("b").join(&name)).unwrap();
        // Only the recorded output path differs.
        assert_eq!(a.replace("\"out\":\"a\"", ""), b.replace("\"out\":\"b\"", ""));
        assert!(a.contains("ratio,gamma_g,gamma_d,epsilon,max_S_phi,max_S_phi_over_eta,phi_star,error"));
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 14);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    for (threads, out) in [("1", "one"), ("3", "three")] {
        let status = spinsync(
            &["sweep", "--spin", "4", "--points", "9", "--threads", threads, "--out", out],
            dir.path(),
        )
        .status;
        assert!(status.success());
    }
    let read = |sub: &str| {
        fs::read_to_string(dir.path().join(sub).join("sweep_S2_M0_eps1.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(read("one"), read("three"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"schemes":[{"spin":2,"shift":0}],"signals":["eps1"],"eta":0.02,"grid":{"min":0.1,"max":10.0,"points":5},"out":"cfg"}"#;
    fs::write(dir.path().join("c.json"), config).unwrap();
    let out = spinsync(&["sweep", "--config", "c.json", "--eta", "0.01"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("cfg/sweep_S1_M0_eps1.csv")).unwrap();
    assert!(text.contains("\"eta\":0.01"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    let eps: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    assert!((eps - 0.001).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| spinsync(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["sweep", "--eta", "0.5"]), 1);
    assert_eq!(code(&["sweep", "--spin", "1"]), 1);
    assert_eq!(code(&["sweep", "--preset", "nope"]), 1);
    assert_eq!(code(&["sweep", "--bogus"]), 1);
    assert_eq!(code(&["husimi", "--spin", "3", "--resolution", "8"]), 1);
    assert_eq!(code(&["calibrate", "--spin", "2", "--spin", "3"]), 1);
    assert_eq!(code(&["--help"]), 0);
    // Metastable population at extreme ratios fails the null-space uniqueness test.
    assert_eq!(code(&["calibrate", "--spin", "6", "--shift", "edge", "--ratio", "1000"]), 2);
    // An unrecoverable grid point is a warning, promoted by --strict.
    let failing = ["sweep", "--spin", "6", "--shift", "edge", "--signal", "eps2", "--ratio-min", "100", "--ratio-max", "1000", "--points", "2", "--out", "w"];
    assert_eq!(code(&failing), 0);
    let mut strict = failing.to_vec();
    strict.push("--strict");
    assert_eq!(code(&strict), 3);
}

#[test]
fn blockades_report_roots() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsync(&["blockades", "--spin", "3", "--strict", "--out", "b"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("root ").count(), 3);
    let text = fs::read_to_string(dir.path().join("b/blockades_S3-2_M0_eps1.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("# root:")).count(), 3);
    assert!(text.contains("ratio,amplitude_re,amplitude_im,amplitude_abs,max_S_phi_over_eta,error"));
}

#[test]
fn husimi_files_integrate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsync(
        &["husimi", "--spin", "3", "--ratio", "0.1", "--resolution", "16", "--out", "h"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("h/husimi_S3-2_M0_r0.1.csv")).unwrap();
    let mut total = 0.0;
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        total += f[2] * f[3];
        rows += 1;
    }
    assert_eq!(rows, 256);
    assert!((total - 1.0).abs() < 1e-12);
    let pops = fs::read_to_string(dir.path().join("h/husimi_S3-2_M0_r0.1_populations.csv")).unwrap();
    assert_eq!(pops.lines().count(), 5);
}

#[test]
fn calibrate_prints_both_signals() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinsync(&["calibrate", "--spin", "3", "--ratio", "0.01"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["eps1"].as_f64().unwrap() - 1e-4).abs() < 1e-18);
    let achieved = v["eps2"]["achieved_deformation"].as_f64().unwrap();
    assert!((achieved - 0.01).abs() < 1e-8);
}
