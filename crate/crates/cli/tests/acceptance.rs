//! Acceptance criteria 1–13. Each test prints one PASS/FAIL line for its
//! criterion followed by the individual checks; tolerances, sample sizes
//! and seeds are the constants in `wallperc_cli::acceptance`.

use std::path::Path;
use std::process::Command;

use wallperc_cli::acceptance::{self, CriterionReport};

fn assert_criterion(id: u32) {
    let report: CriterionReport = acceptance::run_criterion(id).expect("criterion runs");
    print!("{report}");
    assert!(report.pass(), "{}", report.headline());
}

#[test]
fn criterion_01_tree_exactness() {
    assert_criterion(1);
}

#[test]
fn criterion_02_bernoulli_tree_law() {
    assert_criterion(2);
}

#[test]
fn criterion_03_lattice_exactness() {
    assert_criterion(3);
}

#[test]
fn criterion_04_lamplighter_walls() {
    assert_criterion(4);
}

#[test]
fn criterion_05_lamplighter_sandwich() {
    assert_criterion(5);
}

#[test]
fn criterion_06_expected_degree_bound() {
    assert_criterion(6);
}

#[test]
fn criterion_07_kernel_suite() {
    assert_criterion(7);
}

#[test]
fn criterion_08_schoenberg_fixture() {
    assert_criterion(8);
}

#[test]
fn criterion_09_crofton_calibration() {
    assert_criterion(9);
}

#[test]
fn criterion_10_tiling_percolation() {
    assert_criterion(10);
}

#[test]
fn criterion_11_folner_demo() {
    assert_criterion(11);
}

#[test]
fn criterion_12_threshold_arithmetic() {
    assert_criterion(12);
}

fn wallperc(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_wallperc"))
        .args(args)
        .current_dir(dir)
        .env("WALLPERC_THREADS", "2")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    if !dir.exists() {
        return Vec::new();
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_13_determinism() {
    let mut report = acceptance::run_criterion(13).expect("criterion runs");
    let runs: [&[&str]; 4] = [
        &["simulate", "--family", "free:r=2", "--radius", "5", "--samples", "3000", "--seed", "7", "--clusters", "--out", "out"],
        &["tiling-percolate", "--family", "tiling:p=4,q=5,depth=4", "--samples", "300", "--seed", "7", "--out", "out"],
        &["simulate", "--family", "lamplighter:m=2,r=2", "--radius", "4", "--p", "0.8", "--samples", "2000", "--seed", "7", "--out", "out"],
        &["kernel-check", "--psi", "tau", "--radius", "2", "--samples", "2000", "--seed", "7"],
    ];
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (sa, sb) = (wallperc(args, a.path()), wallperc(args, b.path()));
        let (fa, fb) = (read_all(&a.path().join("out")), read_all(&b.path().join("out")));
        let files_equal = fa == fb;
        report.checks.push(acceptance::Check::new(
            format!("binary `{}` twice", args[0]),
            sa == sb && files_equal,
            "stdout and output files compared byte for byte",
        ));
    }
    print!("{report}");
    assert!(report.pass(), "{}", report.headline());
}
