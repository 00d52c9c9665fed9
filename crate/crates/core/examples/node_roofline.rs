//! Device peaks, roofline ridge points and node power for the Aurora blade.

use fabricmodel::node::{aggregate_system, peak_flops, power_check, roofline_threshold, MemoryTier, NodeSpec, Precision};
use fabricmodel::units::{PB, TERA};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let node = NodeSpec::aurora();
    for dev in [&node.gpu, &node.cpu] {
        for p in Precision::ALL {
            if let Ok(peak) = peak_flops(dev, p, dev.max_clock_ghz) {
                println!("{} {p}: {:.2} TF/s", dev.kind, peak / TERA);
            }
        }
        for tier in [MemoryTier::Hbm, MemoryTier::Ddr] {
            if let Ok(ridge) = roofline_threshold(dev, Precision::Fp64, tier) {
                println!("{} FP64 ridge on {tier}: {ridge:.1} flop/byte", dev.kind);
            }
        }
    }

    let power = power_check(&node, node.cpu.active_draw_w, node.gpu.active_draw_w);
    println!("nominal draw {:.0} W, sustained ok: {}", power.total_w, power.sustained_ok);

    let sys = aggregate_system(&node, 10_624);
    println!("machine: {:.3} PB HBM, {:.2} PB/s HBM bandwidth", sys.hbm_capacity / PB, sys.hbm_bandwidth / PB);
    Ok(())
}
