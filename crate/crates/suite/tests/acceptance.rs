//! Runs every acceptance criterion in order and prints one line per criterion.
//! Exits nonzero when any criterion fails.

use std::io::Write;
use std::process::ExitCode;

use hardy_lab::constants::Constants;
use hardy_lab_suite::{run_all, CRITERIA};

fn main() -> ExitCode {
    let constants = match Constants::load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cannot load constants: {e}");
            return ExitCode::FAILURE;
        }
    };
    let outcomes = run_all(&constants);
    let mut out = std::io::stdout().lock();
    writeln!(out, "\nacceptance: {} criteria", CRITERIA.len()).ok();
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{verdict} {:>2} {:<30} {:>7.2}s  {}",
            o.id, o.title, o.seconds, o.summary
        )
        .ok();
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.id.to_string())
        .collect();
    if failed.is_empty() {
        writeln!(out, "acceptance: all criteria pass").ok();
        ExitCode::SUCCESS
    } else {
        writeln!(
            out,
            "acceptance: {} failed ({})",
            failed.len(),
            failed.join(", ")
        )
        .ok();
        ExitCode::FAILURE
    }
}
