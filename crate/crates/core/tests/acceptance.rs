//! Runs every acceptance criterion at full scale and prints one verdict line
//! per criterion. Exits non-zero when any criterion fails.

use std::process::ExitCode;

use fracpoisson::validation::{run_all, ValidationConfig};

fn main() -> ExitCode {
    let reports = match run_all(&ValidationConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance run aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {} ({}) in {:.1} s: {}",
            r.id, r.name, r.seconds, r.detail
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
