//! Parses a config for a small fabric and a tuned cost model, then reports
//! its census, bandwidth and a collective estimate.

use fabricmodel::config::ModelConfig;
use fabricmodel::metrics::{bandwidth_report, Convention};
use fabricmodel::perfmodel::{allreduce_time, Algorithm, BufferLocation, CollectiveSpec};
use fabricmodel::topology::{entity_census, Topology};

const CONFIG: &str = "
[fabric]
compute_groups = 8
chassis_per_group = 2
switches_per_chassis = 4
nodes_per_chassis = 4
nics_per_node = 4
link_rate_gbps = 400
global_links_per_compute_pair = 3

[cost]
gpu_alpha_us = 2.5
gpu_bandwidth_gbs = 48
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ModelConfig::parse(CONFIG)?;
    let t = Topology::build(&cfg.fabric)?;
    let c = entity_census(&t, &cfg.node);
    println!("{} switches, {} nodes, {} endpoints", c.switches, c.nodes, c.compute_endpoints);

    let bw = bandwidth_report(&t, Convention::FullDuplexDoubled);
    println!(
        "injection {:.1} TB/s, bisection {:.1} TB/s",
        bw.injection / 1e12,
        bw.bisection.unwrap_or(0.0) / 1e12
    );

    let spec = CollectiveSpec::new(Algorithm::Ring, c.nodes, 256e6, BufferLocation::Gpu);
    println!("ring allreduce of 256 MB over {} nodes: {:.2} ms", c.nodes, allreduce_time(&spec, &cfg.cost.gpu)? * 1e3);
    Ok(())
}
