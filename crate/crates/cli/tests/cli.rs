use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sigmor::io::read_errors_csv;

fn sigmor(args: &[&str], dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sigmor"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

const SMALL: &str = "d = 12\nN = 2\nn_train = 6\nn_test = 3\ngrid_points = 101\nr_list = 1..3\n";

#[test]
fn invalid_value_exits_with_config_code_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmor(&["learn"], dir.path(), "d = 1\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains('d'));
    let out = sigmor(&["learn"], dir.path(), "grid_points = many\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid_points"));
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmor(&["simulate", "--threads", "0"], dir.path(), SMALL);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_sim_k_writes_no_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmor(&["simulate"], dir.path(), &format!("{SMALL}sim_k =\n"));
    assert!(out.status.success());
    let sim = dir.path().join("out/simulate");
    assert!(!sim.exists() || fs::read_dir(sim).unwrap().next().is_none());
}

#[test]
fn evaluate_without_reduce_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sigmor(&["learn"], dir.path(), SMALL).status.success());
    let out = sigmor(&["evaluate"], dir.path(), SMALL);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn errors_cover_requested_orders_up_to_rank() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmor(&["pipeline"], dir.path(), SMALL);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors: Vec<_> = read_errors_csv::<f64, _>(fs::File::open(dir.path().join("out/evaluate/errors.csv")).unwrap()).unwrap();
    assert_eq!(errors.iter().map(|e| e.r).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(errors.iter().all(|e| e.e_sig == errors[0].e_sig && e.e_mor.is_finite()));
}
