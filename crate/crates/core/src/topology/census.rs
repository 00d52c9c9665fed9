use std::collections::BTreeMap;

use super::{EndpointKind, GroupKind, LinkClass, Topology};
use crate::node::NodeSpec;

/// Entity counts of a built topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityCounts {
    pub compute_groups: usize,
    pub storage_groups: usize,
    pub service_groups: usize,
    pub switches: usize,
    /// Installed switch ports (switches x radix), used or not.
    pub switch_ports: usize,
    pub nodes: usize,
    pub cpus: usize,
    pub gpus: usize,
    pub compute_endpoints: usize,
    pub storage_endpoints: usize,
    pub service_endpoints: usize,
    pub links_by_class: BTreeMap<LinkClass, usize>,
}

impl EntityCounts {
    pub fn links(&self, class: LinkClass) -> usize {
        self.links_by_class.get(&class).copied().unwrap_or(0)
    }

    pub fn total_links(&self) -> usize {
        self.links_by_class.values().sum()
    }
}

/// Counts groups, switches, nodes, endpoints and links. CPU and GPU totals
/// scale the node count by the per-node composition of `node`.
pub fn entity_census(t: &Topology, node: &NodeSpec) -> EntityCounts {
    let count_groups = |kind| t.groups().iter().filter(|g| g.kind == kind).count();
    let mut compute_endpoints = 0;
    let mut storage_endpoints = 0;
    let mut service_endpoints = 0;
    for ep in t.endpoints() {
        match ep.kind {
            EndpointKind::Compute { .. } => compute_endpoints += 1,
            EndpointKind::Storage { .. } => storage_endpoints += 1,
            EndpointKind::Service { .. } => service_endpoints += 1,
        }
    }
    let mut links_by_class: BTreeMap<LinkClass, usize> =
        LinkClass::ALL.iter().map(|&c| (c, 0)).collect();
    for link in t.links() {
        *links_by_class.entry(link.class).or_default() += 1;
    }
    let nodes = t.node_count();
    EntityCounts {
        compute_groups: count_groups(GroupKind::Compute),
        storage_groups: count_groups(GroupKind::Storage),
        service_groups: count_groups(GroupKind::Service),
        switches: t.switches().len(),
        switch_ports: t.switches().len() * t.config().switch_radix,
        nodes,
        cpus: nodes * node.cpus,
        gpus: nodes * node.gpus,
        compute_endpoints,
        storage_endpoints,
        service_endpoints,
        links_by_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::FabricConfig;

    #[test]
    fn tiny_census() {
        let t = Topology::build(&FabricConfig::tiny()).unwrap();
        let c = entity_census(&t, &NodeSpec::aurora());
        assert_eq!(c.nodes, 4);
        assert_eq!(c.compute_endpoints, 8);
        assert_eq!(c.links(LinkClass::GlobalCompute), 2);
        assert_eq!(c.links(LinkClass::Injection), 8);
        // per group, one chassis: 6 pairs plus the doubled (0,1) and (2,3)
        assert_eq!(c.links(LinkClass::LocalIntraChassis), 16);
        assert_eq!(c.links(LinkClass::LocalInterChassis), 0);
    }
}
