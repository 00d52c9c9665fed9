//! Injection, global and bisection bandwidth under both counting conventions,
//! plus the exhaustive min-cut on a small instance.

use fabricmodel::metrics::{bandwidth_report, min_cut_oracle, Convention};
use fabricmodel::topology::{aurora_preset, FabricConfig, Topology};
use fabricmodel::units::PB;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::build(&aurora_preset())?;
    for conv in [Convention::Unidirectional, Convention::FullDuplexDoubled] {
        let bw = bandwidth_report(&t, conv);
        println!(
            "{:<20} injection {:.4} PB/s  global {:.4} PB/s  bisection {:.4} PB/s",
            conv.as_str(),
            bw.injection / PB,
            bw.global / PB,
            bw.bisection.unwrap_or(f64::NAN) / PB
        );
    }

    let small = Topology::build(&FabricConfig::scaled_aurora(8))?;
    let cut = min_cut_oracle(&small, Convention::FullDuplexDoubled)?;
    let side: Vec<String> = cut.side.iter().map(|g| g.to_string()).collect();
    println!("8-group min cut {:.3} TB/s, side [{}]", cut.bytes_per_sec / 1e12, side.join(" "));
    Ok(())
}
