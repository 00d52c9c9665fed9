//! Exascale compute blade model: device peaks, memory, power, and the
//! machine-level aggregates they imply.

use std::collections::BTreeMap;
use std::fmt;

use crate::units::{GB, TB};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NodeError {
    #[error("{device} has no {precision} rate")]
    UnsupportedPrecision {
        device: DeviceKind,
        precision: Precision,
    },
    #[error("{device} has no {tier} memory tier")]
    UnsupportedTier { device: DeviceKind, tier: MemoryTier },
    #[error("{tier} bandwidth of {device} is zero")]
    ZeroBandwidth { device: DeviceKind, tier: MemoryTier },
    #[error("peak must be positive, got {0}")]
    NonPositivePeak(f64),
    #[error("invalid node spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceKind {
    Cpu,
    Gpu,
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Cpu => "CPU",
            DeviceKind::Gpu => "GPU",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Precision {
    Fp64,
    Fp32,
    Tf32,
    Bf16,
    Fp16,
    Int8,
}

impl Precision {
    pub const ALL: [Precision; 6] = [
        Precision::Fp64,
        Precision::Fp32,
        Precision::Tf32,
        Precision::Bf16,
        Precision::Fp16,
        Precision::Int8,
    ];
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Fp64 => "FP64",
            Precision::Fp32 => "FP32",
            Precision::Tf32 => "TF32",
            Precision::Bf16 => "BF16",
            Precision::Fp16 => "FP16",
            Precision::Int8 => "INT8",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemoryTier {
    Hbm,
    Ddr,
}

impl fmt::Display for MemoryTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryTier::Hbm => "HBM",
            MemoryTier::Ddr => "DDR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorySpec {
    pub capacity_bytes: f64,
    /// Sustained (STREAM triad) bandwidth of one device.
    pub bandwidth_bytes_per_sec: f64,
}

/// Vector-engine layout of one Xe-core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XeCore {
    pub vector_engines: u64,
    /// FP64 lanes of one 512-bit vector unit.
    pub fp64_lanes: u64,
    /// FMAs co-issued per engine per clock.
    pub co_issue: u64,
}

impl XeCore {
    pub const PVC: XeCore = XeCore {
        vector_engines: 8,
        fp64_lanes: 8,
        co_issue: 2,
    };

    /// An FMA counts as two operations.
    pub fn fp64_ops_per_clock(&self) -> u64 {
        self.vector_engines * self.fp64_lanes * self.co_issue * 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub kind: DeviceKind,
    /// Cores (CPU) or Xe-cores (GPU).
    pub units: u64,
    /// Operations per clock of one unit, per precision, where known.
    pub ops_per_unit_clock: BTreeMap<Precision, u64>,
    pub max_clock_ghz: f64,
    pub memory: BTreeMap<MemoryTier, MemorySpec>,
    /// Draw when a workload actively uses the device.
    pub active_draw_w: f64,
    /// Measured GEMM rates standing in for the peak where no op count is known.
    pub peak_proxy: BTreeMap<Precision, f64>,
}

impl DeviceSpec {
    /// Data Center GPU Max 1550: 128 Xe-cores at up to 1.6 GHz, 128 GB HBM2e.
    pub fn pvc() -> Self {
        let per_core = XeCore::PVC.fp64_ops_per_clock();
        DeviceSpec {
            kind: DeviceKind::Gpu,
            units: 128,
            // FP32 runs at the FP64 rate on the vector engines
            ops_per_unit_clock: BTreeMap::from([(Precision::Fp64, per_core), (Precision::Fp32, per_core)]),
            max_clock_ghz: 1.6,
            memory: BTreeMap::from([(
                MemoryTier::Hbm,
                MemorySpec {
                    capacity_bytes: 128.0 * GB,
                    bandwidth_bytes_per_sec: 2.1 * TB,
                },
            )]),
            active_draw_w: 500.0,
            peak_proxy: BTreeMap::new(),
        }
    }

    /// Xeon Max (SPR) socket: 52 cores, 64 GB HBM2e, 0.5 TB DDR5.
    pub fn spr() -> Self {
        DeviceSpec {
            kind: DeviceKind::Cpu,
            units: 52,
            ops_per_unit_clock: BTreeMap::new(),
            max_clock_ghz: 0.0,
            memory: BTreeMap::from([
                (
                    MemoryTier::Hbm,
                    MemorySpec {
                        capacity_bytes: 64.0 * GB,
                        bandwidth_bytes_per_sec: 0.63 * TB,
                    },
                ),
                (
                    MemoryTier::Ddr,
                    MemorySpec {
                        capacity_bytes: 0.5 * TB,
                        bandwidth_bytes_per_sec: 0.24 * TB,
                    },
                ),
            ]),
            active_draw_w: 350.0,
            peak_proxy: BTreeMap::from([(Precision::Fp64, 2.9e12)]),
        }
    }

    pub fn ops_per_clock(&self, precision: Precision) -> Option<u64> {
        self.ops_per_unit_clock.get(&precision).map(|per| per * self.units)
    }

    pub fn memory(&self, tier: MemoryTier) -> Option<&MemorySpec> {
        self.memory.get(&tier)
    }
}

/// Whole-device operations per clock times the clock.
pub fn peak_flops(dev: &DeviceSpec, precision: Precision, clock_ghz: f64) -> Result<f64, NodeError> {
    let ops = dev.ops_per_clock(precision).ok_or(NodeError::UnsupportedPrecision {
        device: dev.kind,
        precision,
    })?;
    if clock_ghz < 0.0 || !clock_ghz.is_finite() {
        return Err(NodeError::InvalidSpec(format!("clock {clock_ghz} GHz")));
    }
    Ok(ops as f64 * clock_ghz * 1e9)
}

pub fn measured_efficiency(measured: f64, peak: f64) -> Result<f64, NodeError> {
    if peak <= 0.0 || peak.is_nan() {
        return Err(NodeError::NonPositivePeak(peak));
    }
    Ok(measured / peak)
}

/// Arithmetic intensity (FLOP/byte) above which `dev` is compute-bound on
/// `tier`. Uses the theoretical peak at the maximum clock, or the measured
/// proxy when the op count is unknown.
pub fn roofline_threshold(
    dev: &DeviceSpec,
    precision: Precision,
    tier: MemoryTier,
) -> Result<f64, NodeError> {
    let peak = match peak_flops(dev, precision, dev.max_clock_ghz) {
        Ok(p) => p,
        Err(e @ NodeError::UnsupportedPrecision { .. }) => {
            *dev.peak_proxy.get(&precision).ok_or(e)?
        }
        Err(e) => return Err(e),
    };
    let mem = dev.memory(tier).ok_or(NodeError::UnsupportedTier {
        device: dev.kind,
        tier,
    })?;
    if mem.bandwidth_bytes_per_sec <= 0.0 {
        return Err(NodeError::ZeroBandwidth {
            device: dev.kind,
            tier,
        });
    }
    Ok(peak / mem.bandwidth_bytes_per_sec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub cpus: usize,
    pub gpus: usize,
    pub nics: usize,
    pub cpu: DeviceSpec,
    pub gpu: DeviceSpec,
    /// Per Xe-Link, bytes/s.
    pub xe_link_bw: f64,
    /// Per GPU PCIe Gen5 x16 link, bytes/s.
    pub pcie_bw: f64,
    pub sustained_power_w: f64,
    pub peak_power_w: f64,
    /// Window over which the peak draw may be sustained, milliseconds.
    pub peak_window_ms: (f64, f64),
    /// Board draw not attributed to CPUs or GPUs.
    pub overhead_w: f64,
    pub ddr_per_node: f64,
    /// Node HBM bandwidth. Not decomposed per device.
    pub hbm_bw_per_node: f64,
    pub ddr_bw_per_node: f64,
}

impl NodeSpec {
    pub fn aurora() -> Self {
        NodeSpec {
            cpus: 2,
            gpus: 6,
            nics: 8,
            cpu: DeviceSpec::spr(),
            gpu: DeviceSpec::pvc(),
            xe_link_bw: 28.0 * GB,
            pcie_bw: 64.0 * GB,
            sustained_power_w: 4000.0,
            peak_power_w: 4600.0,
            peak_window_ms: (5.0, 20.0),
            // nominal 3.8 kW less 2 x 350 W and 6 x 500 W
            overhead_w: 100.0,
            // 10.62 PB / 10,624 nodes
            ddr_per_node: 1.0 * TB,
            // 147.46 PB/s / 10,624 nodes
            hbm_bw_per_node: 13.88 * TB,
            // 5.31 PB/s / 10,624 nodes
            ddr_bw_per_node: 0.5 * TB,
        }
    }

    pub fn hbm_per_node(&self) -> f64 {
        let cap = |d: &DeviceSpec| d.memory(MemoryTier::Hbm).map_or(0.0, |m| m.capacity_bytes);
        self.cpus as f64 * cap(&self.cpu) + self.gpus as f64 * cap(&self.gpu)
    }

    pub fn nominal_draw_w(&self) -> f64 {
        self.cpus as f64 * self.cpu.active_draw_w
            + self.gpus as f64 * self.gpu.active_draw_w
            + self.overhead_w
    }

    pub fn check(&self) -> Result<(), NodeError> {
        if self.cpus == 0 && self.gpus == 0 {
            return Err(NodeError::InvalidSpec("node has no compute devices".into()));
        }
        if self.sustained_power_w > self.peak_power_w {
            return Err(NodeError::InvalidSpec(format!(
                "sustained power {} W exceeds peak {} W",
                self.sustained_power_w, self.peak_power_w
            )));
        }
        if self.nominal_draw_w() > self.peak_power_w {
            return Err(NodeError::InvalidSpec(format!(
                "component draws {} W exceed peak {} W",
                self.nominal_draw_w(),
                self.peak_power_w
            )));
        }
        Ok(())
    }
}

impl Default for NodeSpec {
    fn default() -> Self {
        NodeSpec::aurora()
    }
}

/// Machine-level totals: per-node constants times the node count.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub node_count: usize,
    pub cpus: usize,
    pub gpus: usize,
    pub nics: usize,
    pub hbm_capacity: f64,
    pub ddr_capacity: f64,
    pub hbm_bandwidth: f64,
    pub ddr_bandwidth: f64,
    /// Sum of theoretical GPU FP64 peaks at maximum clock.
    pub gpu_fp64_peak: f64,
    pub sustained_power_w: f64,
}

pub fn aggregate_system(node: &NodeSpec, node_count: usize) -> SystemSpec {
    let k = node_count as f64;
    let gpu_peak = peak_flops(&node.gpu, Precision::Fp64, node.gpu.max_clock_ghz).unwrap_or(0.0);
    SystemSpec {
        node_count,
        cpus: node.cpus * node_count,
        gpus: node.gpus * node_count,
        nics: node.nics * node_count,
        hbm_capacity: node.hbm_per_node() * k,
        ddr_capacity: node.ddr_per_node * k,
        hbm_bandwidth: node.hbm_bw_per_node * k,
        ddr_bandwidth: node.ddr_bw_per_node * k,
        gpu_fp64_peak: gpu_peak * node.gpus as f64 * k,
        sustained_power_w: node.sustained_power_w * k,
    }
}

/// One intermediate voltage converter and the device it feeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Ivoc {
    pub device: DeviceKind,
    pub ordinal: usize,
    pub draw_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub total_w: f64,
    pub overhead_w: f64,
    pub ivocs: Vec<Ivoc>,
    pub sustained_ok: bool,
    pub peak_ok: bool,
}

pub fn power_check(node: &NodeSpec, cpu_draw_w: f64, gpu_draw_w: f64) -> PowerReport {
    let ivocs: Vec<Ivoc> = (0..node.cpus)
        .map(|i| Ivoc {
            device: DeviceKind::Cpu,
            ordinal: i,
            draw_w: cpu_draw_w,
        })
        .chain((0..node.gpus).map(|i| Ivoc {
            device: DeviceKind::Gpu,
            ordinal: i,
            draw_w: gpu_draw_w,
        }))
        .collect();
    let total_w = ivocs.iter().map(|v| v.draw_w).sum::<f64>() + node.overhead_w;
    PowerReport {
        total_w,
        overhead_w: node.overhead_w,
        ivocs,
        sustained_ok: total_w <= node.sustained_power_w,
        peak_ok: total_w <= node.peak_power_w,
    }
}

/// Achieved rate per node of a run over `nodes` nodes.
pub fn per_node_rate(total: f64, nodes: usize) -> f64 {
    total / nodes as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn xe_core_is_256_ops() {
        assert_eq!(XeCore::PVC.fp64_ops_per_clock(), 256);
        assert_eq!(DeviceSpec::pvc().ops_per_clock(Precision::Fp64), Some(32_768));
    }

    #[test]
    fn pvc_peak() {
        let p = peak_flops(&DeviceSpec::pvc(), Precision::Fp64, 1.6).unwrap();
        assert_relative_eq!(p, 52.4288e12);
        assert_eq!(peak_flops(&DeviceSpec::pvc(), Precision::Fp64, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cpu_tf32_unsupported() {
        assert_eq!(
            peak_flops(&DeviceSpec::spr(), Precision::Tf32, 2.0),
            Err(NodeError::UnsupportedPrecision {
                device: DeviceKind::Cpu,
                precision: Precision::Tf32
            })
        );
        assert!(roofline_threshold(&DeviceSpec::spr(), Precision::Tf32, MemoryTier::Ddr).is_err());
    }

    #[test]
    fn efficiency() {
        assert_relative_eq!(measured_efficiency(29.2e12, 52.4288e12).unwrap(), 0.556946, epsilon = 1e-6);
        assert_eq!(measured_efficiency(5.0, 5.0).unwrap(), 1.0);
        assert!(measured_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn rooflines() {
        let gpu = roofline_threshold(&DeviceSpec::pvc(), Precision::Fp64, MemoryTier::Hbm).unwrap();
        assert_relative_eq!(gpu, 52.4288e12 / 2.1e12);
        let cpu = roofline_threshold(&DeviceSpec::spr(), Precision::Fp64, MemoryTier::Ddr).unwrap();
        assert_relative_eq!(cpu, 12.083333, epsilon = 1e-5);
        assert!(matches!(
            roofline_threshold(&DeviceSpec::pvc(), Precision::Fp64, MemoryTier::Ddr),
            Err(NodeError::UnsupportedTier { .. })
        ));
    }

    #[test]
    fn zero_bandwidth_tier_is_an_error() {
        let mut gpu = DeviceSpec::pvc();
        gpu.memory.get_mut(&MemoryTier::Hbm).unwrap().bandwidth_bytes_per_sec = 0.0;
        assert!(matches!(
            roofline_threshold(&gpu, Precision::Fp64, MemoryTier::Hbm),
            Err(NodeError::ZeroBandwidth { .. })
        ));
    }

    #[test]
    fn node_memory() {
        let n = NodeSpec::aurora();
        assert_eq!(n.hbm_per_node(), 896e9);
        assert!(n.check().is_ok());
    }

    #[test]
    fn single_node_system_matches_node() {
        let n = NodeSpec::aurora();
        let s = aggregate_system(&n, 1);
        assert_eq!(s.cpus, n.cpus);
        assert_eq!(s.gpus, n.gpus);
        assert_eq!(s.hbm_capacity, n.hbm_per_node());
        assert_eq!(s.ddr_capacity, n.ddr_per_node);
        assert_eq!(s.hbm_bandwidth, n.hbm_bw_per_node);
        assert_eq!(s.ddr_bandwidth, n.ddr_bw_per_node);
    }

    #[test]
    fn power_cases() {
        let n = NodeSpec::aurora();
        let nominal = power_check(&n, 350.0, 500.0);
        assert_eq!(nominal.total_w, 3800.0);
        assert!(nominal.sustained_ok && nominal.peak_ok);
        assert_eq!(nominal.ivocs.len(), 8);

        let idle = power_check(&n, 0.0, 0.0);
        assert_eq!(idle.total_w, 100.0);

        let hot = power_check(&n, 400.0, 600.0);
        assert_eq!(hot.total_w, 4500.0);
        assert!(!hot.sustained_ok);
        assert!(hot.peak_ok);
    }

    #[test]
    fn rejects_sustained_above_peak() {
        let mut n = NodeSpec::aurora();
        n.sustained_power_w = 5000.0;
        assert!(n.check().is_err());
    }
}
