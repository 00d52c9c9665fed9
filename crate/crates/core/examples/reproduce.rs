//! Runs the full reproduction report and prints it as a table.

use fabricmodel::config::ModelConfig;
use fabricmodel::reference::ReferenceSet;
use fabricmodel::report::reproduce;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = reproduce(&ModelConfig::aurora(), &ReferenceSet::builtin())?;
    report.write_table(&mut std::io::stdout())?;
    println!("{} passed, {} failed", report.passed(), report.failed());
    Ok(())
}
