//! Run the full check suite for a configuration and write JSON-lines and
//! CSV reports, as `sigop verify` does.
//!
//! ```bash
//! cargo run -p sigop --example verify_suite
//! ```

use sigop::export::{reports_csv, reports_jsonl};
use sigop::verify::{all_pass, run_suite};
use sigop::RunConfig;

pub fn run_example() -> sigop::Result<()> {
    let mut config = RunConfig::slab(1.0, 2.0, 3);
    config.set("w=[\"smooth_step:5\"]")?;
    let reports = run_suite(&config);
    for r in &reports {
        println!("{} {:<50} {:.2e}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.value);
    }
    let dir = std::env::temp_dir().join(format!("sigop-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.jsonl"), reports_jsonl(&reports)?)?;
    std::fs::write(dir.join("summary.csv"), reports_csv(&reports, &config.content_hash()))?;
    println!("all pass: {}; reports in {}", all_pass(&reports), dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> sigop::Result<()> {
    run_example()
}
