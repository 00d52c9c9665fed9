//! Minimal and Valiant routes between two endpoints, and the hop-count
//! histogram of a scaled-down fabric.

use fabricmodel::routing::{diameter, minimal_routes, valiant_route, DiameterMode};
use fabricmodel::topology::{EndpointId, FabricConfig, GroupId, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Topology::build(&FabricConfig::scaled_aurora(6))?;
    let (src, dst) = (EndpointId(3), EndpointId(900));

    let routes = minimal_routes(&t, src, dst)?;
    println!("{} minimal routes of {} switch hops", routes.len(), routes[0].switch_hop_count());
    let first: Vec<&str> = routes[0].classes.iter().map(|c| c.as_str()).collect();
    println!("  first: {}", first.join(" -> "));

    let v = valiant_route(&t, src, dst, GroupId(4))?;
    let classes: Vec<&str> = v.classes.iter().map(|c| c.as_str()).collect();
    println!("valiant via g4: {} hops, {} global: {}", v.switch_hop_count(), v.global_links(), classes.join(" -> "));

    let stats = diameter(&t, DiameterMode::Exhaustive)?;
    println!("diameter {} over {} pairs", stats.max, stats.pairs);
    for (hops, n) in &stats.histogram {
        println!("  {hops} hops: {n}");
    }
    Ok(())
}
