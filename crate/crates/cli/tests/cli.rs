//! The binary's exit codes, messages and output directory.

use std::fs;
use std::process::Command;

fn wavestat() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavestat"))
}

#[test]
fn onemode_run_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavestat()
        .args(["onemode-pdf", "--reproducible", "--workers", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS [6a]")), "{stdout}");
    for name in ["pdf.csv", "pdf.csv.schema.json", "summary.json"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
}

#[test]
fn config_errors_name_the_field_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("kind = \"mc-kinetic-3w\"\n[system]\nepsilon = -1.0\n", "system.epsilon"),
        ("kind = \"mc-kinetic-3w\"\nfoo = 1\n", "foo"),
        ("kind = \"mc-kinetic-3w\"\n[ensemble]\nrealizations = 0\n", "ensemble.realizations"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.toml"));
        fs::write(&path, text).unwrap();
        let out = wavestat().arg("validate").arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(field), "{field} not named in: {stderr}");
    }
}

#[test]
fn syntax_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, "kind = \"pbp-triad\"\n[pbp\ncells = 4\n").unwrap();
    let out = wavestat().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn subcommand_and_config_kind_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pbp.toml");
    fs::write(&path, "kind = \"pbp-triad\"\n").unwrap();
    let out = wavestat().arg("onemode-pdf").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_verdict_exits_1() {
    // The grid stops at s = 5n, so no tail points reach s/n >= 10.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.toml");
    fs::write(&path, "kind = \"onemode-pdf\"\n[onemode]\nflux = -0.01\ns_max = 5.0\n").unwrap();
    let out = wavestat().arg("onemode-pdf").arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL [6b]"));
}

#[test]
fn verify_subset_prints_one_line_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = wavestat()
        .args(["verify", "--only", "1,4,11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let ids: Vec<&str> = stdout
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .map(|l| l.split(['[', ']']).nth(1).unwrap())
        .collect();
    assert_eq!(ids, ["1", "4", "11"]);
    assert!(dir.path().join("verdicts.json").exists());

    let bad = wavestat().args(["verify", "--only", "12"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
