use std::ops::Range;

use super::TopologyError;

/// Which switches in a compute group source global compute links, and how
/// many ports each one dedicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalPortPlan {
    /// Global ports available on every switch.
    pub base_ports: usize,
    /// Additional global ports on the switches in `extra_switches`.
    pub extra_ports: usize,
    /// Zero-based switch indices (within a group) carrying the extra ports.
    /// Indices beyond the group size are ignored.
    pub extra_switches: Range<usize>,
}

impl GlobalPortPlan {
    /// Global-port capacity of the switch at `index` within its group.
    pub fn ports_on(&self, index: usize) -> usize {
        if self.extra_switches.contains(&index) {
            self.base_ports + self.extra_ports
        } else {
            self.base_ports
        }
    }

    /// Total global ports a group of `switches` switches offers.
    pub fn capacity(&self, switches: usize) -> usize {
        (0..switches).map(|s| self.ports_on(s)).sum()
    }
}

/// Declarative description of a dragonfly deployment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FabricConfig {
    pub compute_groups: usize,
    pub storage_groups: usize,
    pub service_groups: usize,
    pub switches_per_group: usize,
    pub chassis_per_group: usize,
    pub switches_per_chassis: usize,
    pub nodes_per_chassis: usize,
    pub nics_per_node: usize,
    /// Per-direction rate of every link, Gb/s.
    pub link_rate_gbps: u32,
    pub switch_radix: usize,
    pub global_links_per_compute_pair: usize,
    pub service_uplinks_per_compute_group: usize,
    pub storage_uplinks_per_io_group: usize,
    pub storage_endpoints_per_group: usize,
    pub service_endpoints_per_group: usize,
    /// Ports per switch spent on peers inside the same chassis.
    pub intra_chassis_port_budget: usize,
    pub global_port_plan: GlobalPortPlan,
}

/// The Aurora Slingshot-11 deployment: 166 compute, 8 storage and 1 service
/// group of 32 Rosetta switches, 8 Cassini NICs per node.
pub fn aurora_preset() -> FabricConfig {
    FabricConfig {
        compute_groups: 166,
        storage_groups: 8,
        service_groups: 1,
        switches_per_group: 32,
        chassis_per_group: 8,
        switches_per_chassis: 4,
        nodes_per_chassis: 8,
        nics_per_node: 8,
        link_rate_gbps: 200,
        switch_radix: 64,
        global_links_per_compute_pair: 2,
        service_uplinks_per_compute_group: 2,
        storage_uplinks_per_io_group: 2,
        // 128 DAOS servers per storage group, 2 NICs each.
        storage_endpoints_per_group: 256,
        service_endpoints_per_group: 0,
        intra_chassis_port_budget: 4,
        // 10 ports everywhere, +2 on switches 11-15 (1-based): 32*10 + 5*2 = 330.
        global_port_plan: GlobalPortPlan {
            base_ports: 10,
            extra_ports: 2,
            extra_switches: 10..15,
        },
    }
}

impl Default for FabricConfig {
    fn default() -> Self {
        aurora_preset()
    }
}

impl FabricConfig {
    /// Smallest legal instance: 2 compute groups of one 4-switch chassis,
    /// 2 nodes with 2 NICs each, 2 global links between the groups.
    pub fn tiny() -> Self {
        FabricConfig {
            compute_groups: 2,
            storage_groups: 0,
            service_groups: 0,
            switches_per_group: 4,
            chassis_per_group: 1,
            switches_per_chassis: 4,
            nodes_per_chassis: 2,
            nics_per_node: 2,
            ..aurora_preset()
        }
    }

    /// Aurora wiring rules on a reduced number of groups, with storage and
    /// service groups dropped. Useful for exhaustive checks.
    pub fn scaled_aurora(compute_groups: usize) -> Self {
        FabricConfig {
            compute_groups,
            storage_groups: 0,
            service_groups: 0,
            ..aurora_preset()
        }
    }

    pub fn total_groups(&self) -> usize {
        self.compute_groups + self.storage_groups + self.service_groups
    }

    pub fn nodes_per_group(&self) -> usize {
        self.chassis_per_group * self.nodes_per_chassis
    }

    pub fn compute_nodes(&self) -> usize {
        self.compute_groups * self.nodes_per_group()
    }

    /// Global compute links every compute group must source.
    pub fn global_links_per_group(&self) -> usize {
        self.compute_groups.saturating_sub(1) * self.global_links_per_compute_pair
    }

    /// Extra links added to each doubled intra-chassis pair.
    pub(crate) fn intra_chassis_extra(&self) -> usize {
        self.intra_chassis_port_budget + 1 - self.switches_per_chassis
    }

    /// Checks the structural invariants that do not depend on wiring.
    pub fn check(&self) -> Result<(), TopologyError> {
        let positive = [
            ("compute_groups", self.compute_groups),
            ("switches_per_group", self.switches_per_group),
            ("chassis_per_group", self.chassis_per_group),
            ("switches_per_chassis", self.switches_per_chassis),
            ("nodes_per_chassis", self.nodes_per_chassis),
            ("nics_per_node", self.nics_per_node),
            ("switch_radix", self.switch_radix),
            ("link_rate_gbps", self.link_rate_gbps as usize),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if self.compute_groups > 1 && self.global_links_per_compute_pair == 0 {
            return Err(invalid(
                "global_links_per_compute_pair must be positive with more than one compute group",
            ));
        }
        if self.switches_per_group != self.chassis_per_group * self.switches_per_chassis {
            return Err(invalid(format!(
                "switches_per_group ({}) != chassis_per_group ({}) x switches_per_chassis ({})",
                self.switches_per_group, self.chassis_per_group, self.switches_per_chassis
            )));
        }
        if self.intra_chassis_port_budget + 1 < self.switches_per_chassis {
            return Err(invalid(format!(
                "intra_chassis_port_budget ({}) cannot reach the {} other switches of a chassis",
                self.intra_chassis_port_budget,
                self.switches_per_chassis - 1
            )));
        }
        if self.intra_chassis_extra() > 0 && self.switches_per_chassis % 2 == 1 {
            return Err(invalid(
                "doubled intra-chassis links need an even number of switches per chassis",
            ));
        }
        let uplink_switches = self.service_groups + self.storage_groups;
        if uplink_switches > self.switches_per_group {
            return Err(invalid(format!(
                "{uplink_switches} service/storage groups need more uplink switches than the {} per group",
                self.switches_per_group
            )));
        }
        Ok(())
    }
}

fn invalid(reason: impl Into<String>) -> TopologyError {
    TopologyError::InvalidConfig {
        reason: reason.into(),
    }
}
