//! Runs the twelve reproduction criteria and prints one PASS/FAIL line per
//! criterion, followed by the measurements of any that failed. Exits
//! nonzero if a criterion fails.

use std::process::ExitCode;

use g2nilflow::verify::Suite;

fn main() -> ExitCode {
    let report = Suite::new().run_with(None, |c| {
        println!("{}", c.summary());
        for m in c.failures() {
            println!("       {m}");
        }
    });
    let failed = report.failed_names();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", report.criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria failed: {}", failed.len(), report.criteria.len(), failed.join(", "));
        ExitCode::FAILURE
    }
}
