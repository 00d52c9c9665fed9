//! Allreduce predictions from the calibrated cost model, flat and two-level,
//! and the node-count sweep behind the flat/linear trends.

use fabricmodel::config::CostConfig;
use fabricmodel::perfmodel::{
    allreduce_time, hierarchical_allreduce_time, powers_of_two, sweep_trend, Algorithm, BufferLocation,
    CollectiveSpec, HierarchicalSpec, SweepConfig,
};
use fabricmodel::units::{GB, MICROSECOND};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cost = CostConfig::aurora();
    println!("gpu alpha {:.3} us, 4-NIC efficiency {:.3}", cost.gpu.alpha / MICROSECOND, cost.gpu.multi_nic_efficiency);

    for algo in Algorithm::ALL {
        let t = allreduce_time(&CollectiveSpec::new(algo, 256, GB, BufferLocation::Gpu), &cost.gpu)?;
        println!("{:<20} 256 nodes, 1 GB: {:.2} ms", algo.as_str(), t * 1e3);
    }

    let two_level = HierarchicalSpec::new(Algorithm::Rabenseifner, 256, 12, GB, BufferLocation::Gpu);
    let t = hierarchical_allreduce_time(&two_level, &cost.scaleup, &cost.gpu)?;
    println!("rabenseifner 256 x 12 ranks: {:.2} ms", t * 1e3);

    for algo in [Algorithm::Rabenseifner, Algorithm::Ring] {
        let cfg = SweepConfig {
            algorithm: algo,
            nodes: powers_of_two(16, 512),
            ranks_per_node: cost.ranks_per_node,
            bytes: GB,
            location: BufferLocation::Gpu,
            nics: 1,
        };
        let trend = sweep_trend(&cfg, &cost.scaleup, &cost.gpu)?;
        println!(
            "{:<14} {} (spread {:.1}%, r2 {:.4})",
            algo.as_str(),
            trend.class.as_str(),
            trend.variation * 100.0,
            trend.r_squared
        );
    }
    Ok(())
}
