//! Acceptance criteria 1 to 11. Prints one line per criterion, then fails if any did.
//!
//! Built without the libtest harness so the lines appear in every `cargo test` run.

use std::process::ExitCode;

use wavestat::verify::{run_acceptance, DEFAULT_SEED};

fn main() -> ExitCode {
    let verdicts = run_acceptance(DEFAULT_SEED);
    println!();
    for v in &verdicts {
        println!("{}", v.line());
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.passed).map(|v| v.id.as_str()).collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", verdicts.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
