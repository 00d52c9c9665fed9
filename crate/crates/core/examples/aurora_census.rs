//! Builds the Aurora fabric and prints its entity census and port usage.

use fabricmodel::node::NodeSpec;
use fabricmodel::topology::{aurora_preset, entity_census, validate_topology, LinkClass, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::build(&aurora_preset())?;
    let c = entity_census(&t, &NodeSpec::aurora());
    println!("groups    {} compute, {} storage, {} service", c.compute_groups, c.storage_groups, c.service_groups);
    println!("switches  {} ({} ports)", c.switches, c.switch_ports);
    println!("nodes     {} ({} CPUs, {} GPUs)", c.nodes, c.cpus, c.gpus);
    println!("endpoints {} compute, {} storage", c.compute_endpoints, c.storage_endpoints);
    for class in LinkClass::ALL {
        println!("  {:<20} {}", class.as_str(), c.links(class));
    }

    let report = validate_topology(&t);
    println!("busiest switch uses {} of 64 ports, {} violations", report.max_ports_used(), report.violations.len());
    Ok(())
}
