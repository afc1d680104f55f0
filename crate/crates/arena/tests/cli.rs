use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use arena::format::{load_instance, read_instance, write_instance};
use arena_core::Instance;
use proptest::prelude::*;

fn arena(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arena"))
        .args(args)
        .output()
        .expect("arena binary runs")
}

fn arena_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arena"))
        .args(args)
        .env("ARENA_THREADS", threads)
        .output()
        .expect("arena binary runs")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn run_writes_trial_and_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = arena(&[
        "run",
        "--setup",
        "a",
        "--mechanisms",
        "spa,rfpa,rtruth",
        "--alphas",
        "1.1:1.3:0.1",
        "--trials",
        "2",
        "--queries",
        "6",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&out.join("a_trials.csv")),
        "trial,setup,mechanism,alpha,converged,iterations,lw_eq,lw_opt,poa,gamma_achieved"
    );
    let trials = fs::read_to_string(out.join("a_trials.csv")).unwrap();
    // spa once per trial, rfpa and rtruth at three alphas each.
    assert_eq!(trials.lines().count(), 1 + 2 * (1 + 3 + 3));
    assert!(out.join("a_summary.csv").exists());
    assert!(out.join("a_poa.svg").exists());
}

#[test]
fn run_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = arena_with_threads(
            &[
                "run",
                "--setup",
                "b",
                "--mechanisms",
                "rfpa",
                "--alphas",
                "1.2,1.5",
                "--trials",
                "4",
                "--queries",
                "8",
                "--seed",
                "11",
                "--out",
                out.to_str().unwrap(),
            ],
            threads,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(fs::read(out.join("b_trials.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn bounds_reports_the_rfpa_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = arena(&[
        "bounds",
        "--variant",
        "rfpa",
        "--alpha",
        "1.4",
        "--gamma",
        "0.56",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    let row = stdout.lines().nth(1).unwrap();
    let f: f64 = row.split(',').nth(8).unwrap().parse().unwrap();
    assert!((f - 0.56).abs() < 1e-9, "{row}");
    assert_eq!(
        header(&out.join("bounds_rfpa.csv")),
        "alpha,gamma,beta,g,term_eta_alpha,term_gamma,f"
    );
}

#[test]
fn lb_rtruth_passes_its_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = arena(&[
        "lb",
        "--kind",
        "rtruth",
        "--alpha",
        "1.4",
        "--eps",
        "1e-3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().nth(1).unwrap().ends_with(",true"));
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert!(!arena(&["bounds", "--variant", "rfpa", "--alpha", "0.5"])
        .status
        .success());
    assert!(!arena(&["run", "--setup", "z"]).status.success());
}

#[test]
fn gen_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    let o = arena(&[
        "gen",
        "--setup",
        "a",
        "--queries",
        "4",
        "--trial",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let inst = load_instance(&path).unwrap();
    assert_eq!((inst.num_advertisers(), inst.num_queries()), (2, 4));
    let setup = format!("file:{}", path.display());
    let out = dir.path().join("r");
    let o = arena(&[
        "run",
        "--setup",
        &setup,
        "--mechanisms",
        "spa",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("file_trials.csv").exists());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trips_bit_exactly(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1e6, 1..6), 2..4),
        t in prop::collection::vec(1e-3f64..1e3, 4),
    ) {
        let m = rows[0].len();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.resize(m, 0.5); r }).collect();
        let n = rows.len();
        let inst = Instance::new(rows, t[..n].to_vec()).unwrap();
        let back = read_instance(&write_instance(&inst)).unwrap();
        for i in 0..n {
            prop_assert_eq!(back.target(i).to_bits(), inst.target(i).to_bits());
            for (a, b) in back.values_of(i).iter().zip(inst.values_of(i)) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
