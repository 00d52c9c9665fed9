//! TOML configuration files.
//!
//! ```toml
//! preset = "aurora"
//!
//! [fabric]
//! compute_groups = 12
//! global_extra_switches = "11-15"
//!
//! [cost]
//! gpu_alpha_us = 3.5
//! ```
//!
//! Keys live under `[fabric]`, `[node]`, `[storage]` or `[cost]`; unknown
//! sections or keys are errors. With `preset = "aurora"` every key defaults to
//! the Aurora value. Without it the structural fabric keys in
//! [`REQUIRED_FABRIC_KEYS`] must be given, storage and service groups default
//! to none, and all other keys keep their Aurora value.

use std::fmt;
use std::path::Path;

use crate::node::{DeviceKind, MemoryTier, NodeSpec};
use crate::perfmodel::{
    aurora_mpich_measurements, calibrate_cost_params, BufferLocation, CostParams,
};
use crate::storage::StorageSpec;
use crate::topology::{aurora_preset, FabricConfig, GlobalPortPlan};
use crate::units::{GB, MICROSECOND, PB, TB};

pub const REQUIRED_FABRIC_KEYS: [&str; 5] = [
    "compute_groups",
    "chassis_per_group",
    "switches_per_chassis",
    "nodes_per_chassis",
    "nics_per_node",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown section [{0}] (expected fabric, node, storage or cost)")]
    UnknownSection(String),
    #[error("unknown key `{key}` in {section}")]
    UnknownKey { section: Section, key: String },
    #[error("{section}: `{key} = {value}` is not {expected}")]
    BadValue {
        section: Section,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key `{key}` in [fabric] (or set `preset = \"aurora\"`)")]
    Missing { key: &'static str },
    #[error("unknown preset `{0}` (expected aurora)")]
    UnknownPreset(String),
    #[error(transparent)]
    Topology(#[from] crate::topology::TopologyError),
    #[error(transparent)]
    Node(#[from] crate::node::NodeError),
    #[error(transparent)]
    Storage(#[from] crate::storage::StorageError),
    #[error(transparent)]
    Cost(#[from] crate::perfmodel::CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Top,
    Fabric,
    Node,
    Storage,
    Cost,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Top => "the top level",
            Section::Fabric => "[fabric]",
            Section::Node => "[node]",
            Section::Storage => "[storage]",
            Section::Cost => "[cost]",
        })
    }
}

/// Calibrated cost parameters per buffer location plus the in-node plane.
#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    pub cpu: CostParams,
    pub gpu: CostParams,
    pub scaleup: CostParams,
    /// Ranks per node for two-level collectives.
    pub ranks_per_node: usize,
}

impl CostConfig {
    /// Calibrated from the MPICH microbenchmarks. The in-node plane reuses
    /// the GPU message latency.
    pub fn aurora() -> Self {
        let m = aurora_mpich_measurements();
        let cpu = calibrate_cost_params(&m, BufferLocation::Cpu, 8).expect("built-in calibration");
        let gpu = calibrate_cost_params(&m, BufferLocation::Gpu, 8).expect("built-in calibration");
        CostConfig {
            cpu,
            gpu,
            scaleup: CostParams::xe_link(gpu.alpha),
            ranks_per_node: 12,
        }
    }

    pub fn params(&self, location: BufferLocation) -> &CostParams {
        match location {
            BufferLocation::Cpu => &self.cpu,
            BufferLocation::Gpu => &self.gpu,
        }
    }
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig::aurora()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub fabric: FabricConfig,
    pub node: NodeSpec,
    pub storage: StorageSpec,
    pub cost: CostConfig,
}

impl ModelConfig {
    pub fn aurora() -> Self {
        ModelConfig {
            fabric: aurora_preset(),
            node: NodeSpec::aurora(),
            storage: StorageSpec::aurora(),
            cost: CostConfig::aurora(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = entries(text.parse::<toml::Table>()?)?;
        let mut preset = false;
        for e in entries.iter().filter(|e| e.section == Section::Top) {
            if e.key != "preset" {
                return Err(unknown(e));
            }
            match e.value.as_str() {
                Some("aurora") => preset = true,
                Some(other) => return Err(ConfigError::UnknownPreset(other.to_string())),
                None => return Err(bad(e, "a preset name")),
            }
        }
        let mut cfg = ModelConfig::aurora();
        if !preset {
            for key in REQUIRED_FABRIC_KEYS {
                if !entries.iter().any(|e| e.section == Section::Fabric && e.key == key) {
                    return Err(ConfigError::Missing { key });
                }
            }
            cfg.fabric.storage_groups = 0;
            cfg.fabric.service_groups = 0;
            cfg.fabric.storage_endpoints_per_group = 0;
        }
        let mut switches_given = false;
        for e in &entries {
            match e.section {
                Section::Top => {}
                Section::Fabric => {
                    switches_given |= e.key == "switches_per_group";
                    apply_fabric(&mut cfg.fabric, e)?
                }
                Section::Node => apply_node(&mut cfg.node, e)?,
                Section::Storage => apply_storage(&mut cfg.storage, e)?,
                Section::Cost => apply_cost(&mut cfg.cost, e)?,
            }
        }
        if !switches_given {
            cfg.fabric.switches_per_group = cfg.fabric.chassis_per_group * cfg.fabric.switches_per_chassis;
        }
        cfg.cost.cpu.nics_per_node = cfg.node.nics;
        cfg.cost.gpu.nics_per_node = cfg.node.nics;
        cfg.fabric.check()?;
        cfg.node.check()?;
        cfg.storage.check()?;
        for p in [&cfg.cost.cpu, &cfg.cost.gpu, &cfg.cost.scaleup] {
            p.check()?;
        }
        Ok(cfg)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::aurora()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    section: Section,
    key: String,
    value: toml::Value,
}

fn entries(doc: toml::Table) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (name, value) in doc {
        let toml::Value::Table(table) = value else {
            out.push(Entry {
                section: Section::Top,
                key: name,
                value,
            });
            continue;
        };
        let section = match name.as_str() {
            "fabric" => Section::Fabric,
            "node" => Section::Node,
            "storage" => Section::Storage,
            "cost" => Section::Cost,
            _ => return Err(ConfigError::UnknownSection(name)),
        };
        out.extend(table.into_iter().map(|(key, value)| Entry { section, key, value }));
    }
    Ok(out)
}

fn unknown(e: &Entry) -> ConfigError {
    ConfigError::UnknownKey {
        section: e.section,
        key: e.key.clone(),
    }
}

fn bad(e: &Entry, expected: &'static str) -> ConfigError {
    ConfigError::BadValue {
        section: e.section,
        key: e.key.clone(),
        value: e.value.to_string(),
        expected,
    }
}

fn count(e: &Entry) -> Result<usize, ConfigError> {
    e.value
        .as_integer()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| bad(e, "a non-negative integer"))
}

fn number(e: &Entry) -> Result<f64, ConfigError> {
    let v = match e.value {
        toml::Value::Integer(i) => i as f64,
        toml::Value::Float(f) => f,
        _ => f64::NAN,
    };
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(bad(e, "a non-negative number"))
    }
}

/// `"11-15"` (1-based, inclusive), a single index, or `"none"`.
fn switch_range(e: &Entry) -> Result<std::ops::Range<usize>, ConfigError> {
    let parse = |s: &str| s.trim().parse::<usize>().ok().filter(|&v| v >= 1);
    let (lo, hi) = match &e.value {
        toml::Value::String(s) if s == "none" => return Ok(0..0),
        toml::Value::String(s) => match s.split_once('-') {
            Some((a, b)) => (parse(a), parse(b)),
            None => (parse(s), parse(s)),
        },
        toml::Value::Integer(i) => {
            let v = usize::try_from(*i).ok().filter(|&v| v >= 1);
            (v, v)
        }
        _ => (None, None),
    };
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo <= hi => Ok(lo - 1..hi),
        _ => Err(bad(e, "a 1-based switch range such as \"11-15\"")),
    }
}

fn apply_fabric(f: &mut FabricConfig, e: &Entry) -> Result<(), ConfigError> {
    let plan: &mut GlobalPortPlan = &mut f.global_port_plan;
    match e.key.as_str() {
        "compute_groups" => f.compute_groups = count(e)?,
        "storage_groups" => f.storage_groups = count(e)?,
        "service_groups" => f.service_groups = count(e)?,
        "switches_per_group" => f.switches_per_group = count(e)?,
        "chassis_per_group" => f.chassis_per_group = count(e)?,
        "switches_per_chassis" => f.switches_per_chassis = count(e)?,
        "nodes_per_chassis" => f.nodes_per_chassis = count(e)?,
        "nics_per_node" => f.nics_per_node = count(e)?,
        "link_rate_gbps" => {
            f.link_rate_gbps = u32::try_from(count(e)?).map_err(|_| bad(e, "an integer Gb/s rate"))?
        }
        "switch_radix" => f.switch_radix = count(e)?,
        "global_links_per_compute_pair" => f.global_links_per_compute_pair = count(e)?,
        "service_uplinks_per_compute_group" => f.service_uplinks_per_compute_group = count(e)?,
        "storage_uplinks_per_io_group" => f.storage_uplinks_per_io_group = count(e)?,
        "storage_endpoints_per_group" => f.storage_endpoints_per_group = count(e)?,
        "service_endpoints_per_group" => f.service_endpoints_per_group = count(e)?,
        "intra_chassis_port_budget" => f.intra_chassis_port_budget = count(e)?,
        "global_base_ports" => plan.base_ports = count(e)?,
        "global_extra_ports" => plan.extra_ports = count(e)?,
        "global_extra_switches" => plan.extra_switches = switch_range(e)?,
        _ => return Err(unknown(e)),
    }
    Ok(())
}

fn set_memory(node: &mut NodeSpec, kind: DeviceKind, tier: MemoryTier, capacity: Option<f64>, bw: Option<f64>) {
    let dev = match kind {
        DeviceKind::Cpu => &mut node.cpu,
        DeviceKind::Gpu => &mut node.gpu,
    };
    if let Some(m) = dev.memory.get_mut(&tier) {
        if let Some(c) = capacity {
            m.capacity_bytes = c;
        }
        if let Some(b) = bw {
            m.bandwidth_bytes_per_sec = b;
        }
    }
}

fn apply_node(n: &mut NodeSpec, e: &Entry) -> Result<(), ConfigError> {
    match e.key.as_str() {
        "cpus" => n.cpus = count(e)?,
        "gpus" => n.gpus = count(e)?,
        "nics" => n.nics = count(e)?,
        "gpu_clock_ghz" => n.gpu.max_clock_ghz = number(e)?,
        "cpu_clock_ghz" => n.cpu.max_clock_ghz = number(e)?,
        "gpu_xe_cores" => n.gpu.units = count(e)? as u64,
        "cpu_cores" => n.cpu.units = count(e)? as u64,
        "cpu_active_draw_w" => n.cpu.active_draw_w = number(e)?,
        "gpu_active_draw_w" => n.gpu.active_draw_w = number(e)?,
        "overhead_w" => n.overhead_w = number(e)?,
        "sustained_power_w" => n.sustained_power_w = number(e)?,
        "peak_power_w" => n.peak_power_w = number(e)?,
        "xe_link_gbs" => n.xe_link_bw = number(e)? * GB,
        "pcie_gbs" => n.pcie_bw = number(e)? * GB,
        "gpu_hbm_gb" => set_memory(n, DeviceKind::Gpu, MemoryTier::Hbm, Some(number(e)? * GB), None),
        "cpu_hbm_gb" => set_memory(n, DeviceKind::Cpu, MemoryTier::Hbm, Some(number(e)? * GB), None),
        "gpu_hbm_stream_tbs" => {
            set_memory(n, DeviceKind::Gpu, MemoryTier::Hbm, None, Some(number(e)? * TB))
        }
        "cpu_ddr_stream_tbs" => {
            set_memory(n, DeviceKind::Cpu, MemoryTier::Ddr, None, Some(number(e)? * TB))
        }
        "ddr_per_node_tb" => n.ddr_per_node = number(e)? * TB,
        "hbm_bw_per_node_tbs" => n.hbm_bw_per_node = number(e)? * TB,
        "ddr_bw_per_node_tbs" => n.ddr_bw_per_node = number(e)? * TB,
        _ => return Err(unknown(e)),
    }
    Ok(())
}

fn apply_storage(s: &mut StorageSpec, e: &Entry) -> Result<(), ConfigError> {
    match e.key.as_str() {
        "daos_servers" => s.daos_servers = count(e)?,
        "drives_per_server" => s.drives_per_server = count(e)?,
        "drive_capacity_tb" => s.drive_capacity = number(e)? * TB,
        "nics_per_server" => s.nics_per_server = count(e)?,
        "engines_per_server" => s.engines_per_server = count(e)?,
        "peak_bw_target_tbs" => s.peak_bw_target = number(e)? * TB,
        "ec_data" => s.ec_data = count(e)?,
        "ec_parity" => s.ec_parity = count(e)?,
        "lustre_capacity_pb" => s.lustre_capacity = number(e)? * PB,
        "lustre_peak_bw_gbs" => s.lustre_peak_bw = number(e)? * GB,
        _ => return Err(unknown(e)),
    }
    Ok(())
}

fn apply_cost(c: &mut CostConfig, e: &Entry) -> Result<(), ConfigError> {
    let positive = |e: &Entry| -> Result<f64, ConfigError> {
        let v = number(e)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(bad(e, "a positive number"))
        }
    };
    match e.key.as_str() {
        "cpu_alpha_us" => c.cpu.alpha = number(e)? * MICROSECOND,
        "gpu_alpha_us" => c.gpu.alpha = number(e)? * MICROSECOND,
        "cpu_bandwidth_gbs" => c.cpu.beta = 1.0 / (positive(e)? * GB),
        "gpu_bandwidth_gbs" => c.gpu.beta = 1.0 / (positive(e)? * GB),
        "cpu_multi_nic_efficiency" => c.cpu.multi_nic_efficiency = number(e)?,
        "gpu_multi_nic_efficiency" => c.gpu.multi_nic_efficiency = number(e)?,
        "gamma_s_per_byte" => {
            let g = number(e)?;
            c.cpu.gamma = g;
            c.gpu.gamma = g;
            c.scaleup.gamma = g;
        }
        "scaleup_alpha_us" => c.scaleup.alpha = number(e)? * MICROSECOND,
        "scaleup_bandwidth_gbs" => c.scaleup.beta = 1.0 / (positive(e)? * GB),
        "ranks_per_node" => {
            c.ranks_per_node = count(e)?;
            if c.ranks_per_node == 0 {
                return Err(bad(e, "a positive integer"));
            }
        }
        _ => return Err(unknown(e)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_only() {
        let c = ModelConfig::parse("preset = \"aurora\"\n").unwrap();
        assert_eq!(c, ModelConfig::aurora());
    }

    #[test]
    fn preset_with_overrides() {
        let text = "preset = \"aurora\"\n[fabric]\ncompute_groups = 12 # fewer\nglobal_extra_switches = \"1-2\"\n[cost]\ngamma_s_per_byte = 1e-12\n";
        let c = ModelConfig::parse(text).unwrap();
        assert_eq!(c.fabric.compute_groups, 12);
        assert_eq!(c.fabric.storage_groups, 8);
        assert_eq!(c.fabric.global_port_plan.extra_switches, 0..2);
        assert_eq!(c.cost.gpu.gamma, 1e-12);
    }

    #[test]
    fn switch_range_forms() {
        let parse = |v: &str| {
            ModelConfig::parse(&format!("preset = \"aurora\"\n[fabric]\nglobal_extra_switches = {v}\n"))
                .map(|c| c.fabric.global_port_plan.extra_switches)
        };
        assert_eq!(parse("\"none\"").unwrap(), 0..0);
        assert_eq!(parse("3").unwrap(), 2..3);
        assert_eq!(parse("\"11-15\"").unwrap(), 10..15);
        assert!(parse("0").is_err());
    }

    #[test]
    fn bare_config() {
        let text = "[fabric]\ncompute_groups = 2\nchassis_per_group = 1\nswitches_per_chassis = 4\nnodes_per_chassis = 2\nnics_per_node = 2\n";
        let c = ModelConfig::parse(text).unwrap();
        assert_eq!(
            c.fabric,
            FabricConfig {
                storage_endpoints_per_group: 0,
                ..FabricConfig::tiny()
            }
        );
    }

    #[test]
    fn missing_required() {
        let err = ModelConfig::parse("[fabric]\ncompute_groups = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Missing { key: "chassis_per_group" }));
    }

    #[test]
    fn unknown_key_and_section() {
        let err = ModelConfig::parse("preset = \"aurora\"\n[fabric]\nwarp = 9\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { section: Section::Fabric, .. }), "{err}");
        let err = ModelConfig::parse("[network]\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownSection(_)));
        let err = ModelConfig::parse("compute_groups = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { section: Section::Top, .. }));
    }

    #[test]
    fn bad_values() {
        for text in [
            "preset = \"aurora\"\n[fabric]\ncompute_groups = -1\n",
            "preset = \"aurora\"\n[fabric]\ncompute_groups = \"many\"\n",
            "preset = \"aurora\"\n[fabric]\nglobal_extra_switches = \"5-2\"\n",
            "preset = \"aurora\"\n[cost]\ngpu_bandwidth_gbs = 0\n",
            "preset = \"aurora\"\n[node]\noverhead_w = nan\n",
            "preset = 7\n",
        ] {
            assert!(
                matches!(ModelConfig::parse(text), Err(ConfigError::BadValue { .. })),
                "{text}"
            );
        }
        assert!(matches!(
            ModelConfig::parse("preset = \"frontier\"\n"),
            Err(ConfigError::UnknownPreset(_))
        ));
        let err = ModelConfig::parse("preset = \"aurora\"\njust words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicates_and_invariants() {
        let err = ModelConfig::parse("preset = \"aurora\"\n[fabric]\nswitch_radix = 64\nswitch_radix = 64\n")
            .unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
        let err = ModelConfig::parse("preset = \"aurora\"\n[storage]\nec_parity = 4\n").unwrap_err();
        assert!(matches!(err, ConfigError::Storage(_)));
        let err =
            ModelConfig::parse("preset = \"aurora\"\n[cost]\ncpu_multi_nic_efficiency = 1.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Cost(_)));
    }
}
