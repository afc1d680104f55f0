//! Runs the ten acceptance criteria and prints one line per criterion.
//! Outputs go to a temporary directory.

use std::process::ExitCode;

use arena::acceptance::{run_all, VerifyConfig};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let config = VerifyConfig {
        seed: 7,
        out_dir: dir.path().join("verify"),
    };
    println!("\nrunning acceptance criteria");
    let results = run_all(&config, |r| println!("{}", r.line()));
    let passed = results.iter().filter(|r| r.passed).count();
    println!("acceptance: {passed}/{} criteria passed\n", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
