//! Dragonfly topology construction.
//!
//! A [`Topology`] is built once from a [`FabricConfig`] and never mutated.
//! Construction is deterministic: the same configuration always yields the
//! same link ids, port numbers and therefore byte-identical CSV exports.
//!
//! Wiring applied to every compute group:
//!
//! - each node spreads its NICs round-robin over the switches of its chassis
//!   (2 injection links per switch per node on Aurora);
//! - all switch pairs inside a chassis get one link, and pairs `(0,1)`,
//!   `(2,3)`, ... get extra links until every switch spends exactly
//!   `intra_chassis_port_budget` ports in-chassis;
//! - every switch gets one link to each switch of the group outside its chassis;
//! - every other compute group is reached by `global_links_per_compute_pair`
//!   global links, sourced round-robin from the switches' global ports;
//! - the first `service_groups` switches uplink to the service groups and the
//!   next `storage_groups` switches to the storage groups.

mod census;
mod config;
mod export;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use census::{entity_census, EntityCounts};
pub use config::{aurora_preset, FabricConfig, GlobalPortPlan};
pub use export::write_links_csv;
pub use validate::{validate_topology, SwitchPortUsage, ValidationReport, Violation};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(u32::try_from(i).expect("id overflow"))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(GroupId, "g");
id_type!(SwitchId, "s");
id_type!(EndpointId, "e");
id_type!(NodeId, "n");
id_type!(LinkId, "l");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid fabric configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("switch {switch} needs {demand} ports but has only {radix}")]
    PortBudgetExceeded {
        switch: SwitchId,
        demand: usize,
        radix: usize,
    },

    #[error(
        "global port plan offers {capacity} ports per compute group but {needed} are needed"
    )]
    InfeasibleGlobalPlan { needed: usize, capacity: usize },

    #[error("no free port left for an extra global link between {a} and {b}")]
    NoFreeGlobalPort { a: GroupId, b: GroupId },

    #[error("{0} is not a compute group")]
    NotComputeGroup(GroupId),

    #[error("malformed topology CSV at record {record}: {reason}")]
    Csv { record: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKind {
    Compute,
    Storage,
    Service,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: GroupId,
    pub kind: GroupKind,
    pub switches: Vec<SwitchId>,
    /// Chassis partition of `switches`; empty for storage and service groups.
    pub chassis: Vec<Vec<SwitchId>>,
    /// Intra-group cabling mixes electrical and optical media. Metadata only.
    pub mixed_media: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switch {
    pub id: SwitchId,
    pub group: GroupId,
    /// Position inside the group, zero-based.
    pub index: usize,
    pub chassis: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointKind {
    Compute { node: NodeId, nic: usize },
    Storage { index: usize },
    Service { index: usize },
}

/// A NIC attachment point.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub id: EndpointId,
    pub switch: SwitchId,
    pub kind: EndpointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkClass {
    Injection,
    LocalIntraChassis,
    /// Every local link of a group that is not inside one chassis, including
    /// all local links of storage and service groups.
    LocalInterChassis,
    GlobalCompute,
    GlobalService,
    GlobalStorage,
}

impl LinkClass {
    pub const ALL: [LinkClass; 6] = [
        LinkClass::Injection,
        LinkClass::LocalIntraChassis,
        LinkClass::LocalInterChassis,
        LinkClass::GlobalCompute,
        LinkClass::GlobalService,
        LinkClass::GlobalStorage,
    ];

    pub fn is_local(self) -> bool {
        matches!(self, LinkClass::LocalIntraChassis | LinkClass::LocalInterChassis)
    }

    pub fn is_global(self) -> bool {
        matches!(
            self,
            LinkClass::GlobalCompute | LinkClass::GlobalService | LinkClass::GlobalStorage
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::Injection => "injection",
            LinkClass::LocalIntraChassis => "local_intra_chassis",
            LinkClass::LocalInterChassis => "local_inter_chassis",
            LinkClass::GlobalCompute => "global_compute",
            LinkClass::GlobalService => "global_service",
            LinkClass::GlobalStorage => "global_storage",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        LinkClass::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Medium {
    Electrical,
    Optical,
}

impl Medium {
    pub fn as_str(self) -> &'static str {
        match self {
            Medium::Electrical => "electrical",
            Medium::Optical => "optical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "electrical" => Some(Medium::Electrical),
            "optical" => Some(Medium::Optical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkEnd {
    Switch { switch: SwitchId, port: u32 },
    Endpoint(EndpointId),
}

impl LinkEnd {
    pub fn switch(self) -> Option<SwitchId> {
        match self {
            LinkEnd::Switch { switch, .. } => Some(switch),
            LinkEnd::Endpoint(_) => None,
        }
    }
}

impl fmt::Display for LinkEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkEnd::Switch { switch, port } => write!(f, "{switch}:p{port}"),
            LinkEnd::Endpoint(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub class: LinkClass,
    pub medium: Medium,
    pub rate_gbps: u32,
    pub a: LinkEnd,
    pub b: LinkEnd,
}

impl Link {
    /// Both switches of a switch-to-switch link.
    pub fn switches(&self) -> Option<(SwitchId, SwitchId)> {
        Some((self.a.switch()?, self.b.switch()?))
    }

    /// The far switch as seen from `from`.
    pub fn other_switch(&self, from: SwitchId) -> Option<SwitchId> {
        let (a, b) = self.switches()?;
        if a == from {
            Some(b)
        } else if b == from {
            Some(a)
        } else {
            None
        }
    }

    pub fn bytes_per_sec(&self) -> f64 {
        crate::units::gbps_to_bytes_per_sec(self.rate_gbps as f64)
    }
}

/// Immutable dragonfly graph.
#[derive(Debug, Clone)]
pub struct Topology {
    config: FabricConfig,
    groups: Vec<Group>,
    switches: Vec<Switch>,
    endpoints: Vec<Endpoint>,
    nodes: usize,
    links: Vec<Link>,
    // per switch: switch-to-switch neighbours and the parallel links to each
    neighbors: Vec<BTreeMap<SwitchId, Vec<LinkId>>>,
    // unordered group pair (low, high) -> global links of any class
    group_links: HashMap<(GroupId, GroupId), Vec<LinkId>>,
    injection: Vec<Option<LinkId>>,
}

/// Builds the topology, rejecting switches whose port demand exceeds the radix.
pub fn build_topology(config: &FabricConfig) -> Result<Topology, TopologyError> {
    Topology::build(config)
}

impl Topology {
    pub fn build(config: &FabricConfig) -> Result<Self, TopologyError> {
        let topology = Self::build_unchecked(config)?;
        let mut used = vec![0usize; topology.switches.len()];
        for link in &topology.links {
            for end in [link.a, link.b] {
                if let Some(s) = end.switch() {
                    used[s.index()] += 1;
                }
            }
        }
        if let Some((i, &demand)) = used
            .iter()
            .enumerate()
            .find(|(_, &u)| u > config.switch_radix)
        {
            return Err(TopologyError::PortBudgetExceeded {
                switch: SwitchId::from(i),
                demand,
                radix: config.switch_radix,
            });
        }
        Ok(topology)
    }

    /// Builds without enforcing the switch radix, so that over-subscribed
    /// designs can still be inspected with [`validate_topology`].
    pub fn build_unchecked(config: &FabricConfig) -> Result<Self, TopologyError> {
        config.check()?;
        let needed = config.global_links_per_group();
        let slots = global_slots(config);
        if slots.len() < needed {
            return Err(TopologyError::InfeasibleGlobalPlan {
                needed,
                capacity: slots.len(),
            });
        }

        let skeleton = Skeleton::new(config);
        let mut b = LinkBuilder::new(config, skeleton.switches.len());
        let s_per_g = config.switches_per_group;
        let sw = |g: usize, idx: usize| SwitchId::from(g * s_per_g + idx);

        for ep in &skeleton.endpoints {
            b.add_to_endpoint(LinkClass::Injection, Medium::Electrical, ep.switch, ep.id);
        }

        for group in &skeleton.groups {
            let g = group.id.index();
            match group.kind {
                GroupKind::Compute => {
                    let spc = config.switches_per_chassis;
                    let extra = config.intra_chassis_extra();
                    for i in 0..s_per_g {
                        for j in i + 1..s_per_g {
                            let same_chassis = i / spc == j / spc;
                            let (class, count) = if same_chassis {
                                let doubled = i % spc % 2 == 0 && j == i + 1;
                                (LinkClass::LocalIntraChassis, 1 + if doubled { extra } else { 0 })
                            } else {
                                (LinkClass::LocalInterChassis, 1)
                            };
                            for _ in 0..count {
                                b.add_between(class, Medium::Electrical, sw(g, i), sw(g, j));
                            }
                        }
                    }
                }
                GroupKind::Storage | GroupKind::Service => {
                    for i in 0..s_per_g {
                        for j in i + 1..s_per_g {
                            b.add_between(
                                LinkClass::LocalInterChassis,
                                Medium::Electrical,
                                sw(g, i),
                                sw(g, j),
                            );
                        }
                    }
                }
            }
        }

        let pair = config.global_links_per_compute_pair;
        for g in 0..config.compute_groups {
            for h in g + 1..config.compute_groups {
                for k in 0..pair {
                    // peer rank of h seen from g is h - 1, of g seen from h is g
                    let a = sw(g, slots[(h - 1) * pair + k]);
                    let bb = sw(h, slots[g * pair + k]);
                    b.add_between(LinkClass::GlobalCompute, Medium::Optical, a, bb);
                }
            }
        }

        let first_service = config.compute_groups + config.storage_groups;
        for g in 0..config.compute_groups {
            for v in 0..config.service_groups {
                let up = config.service_uplinks_per_compute_group;
                for k in 0..up {
                    let remote = sw(first_service + v, (g * up + k) % s_per_g);
                    b.add_between(LinkClass::GlobalService, Medium::Optical, sw(g, v), remote);
                }
            }
            for i in 0..config.storage_groups {
                let up = config.storage_uplinks_per_io_group;
                let local = sw(g, config.service_groups + i);
                for k in 0..up {
                    let remote = sw(config.compute_groups + i, (g * up + k) % s_per_g);
                    b.add_between(LinkClass::GlobalStorage, Medium::Optical, local, remote);
                }
            }
        }

        Ok(Self::assemble(config.clone(), skeleton, b.links))
    }

    fn assemble(config: FabricConfig, skeleton: Skeleton, links: Vec<Link>) -> Self {
        let mut neighbors: Vec<BTreeMap<SwitchId, Vec<LinkId>>> =
            vec![BTreeMap::new(); skeleton.switches.len()];
        let mut group_links: HashMap<(GroupId, GroupId), Vec<LinkId>> = HashMap::new();
        let mut injection = vec![None; skeleton.endpoints.len()];
        for link in &links {
            if let LinkEnd::Endpoint(e) = link.b {
                injection[e.index()].get_or_insert(link.id);
            }
            let Some((a, b)) = link.switches() else {
                continue;
            };
            neighbors[a.index()].entry(b).or_default().push(link.id);
            neighbors[b.index()].entry(a).or_default().push(link.id);
            if link.class.is_global() {
                let ga = skeleton.switches[a.index()].group;
                let gb = skeleton.switches[b.index()].group;
                group_links
                    .entry((ga.min(gb), ga.max(gb)))
                    .or_default()
                    .push(link.id);
            }
        }
        Topology {
            config,
            groups: skeleton.groups,
            switches: skeleton.switches,
            endpoints: skeleton.endpoints,
            nodes: skeleton.nodes,
            links,
            neighbors,
            group_links,
            injection,
        }
    }

    /// Returns a copy with `count` extra global compute links between two
    /// compute groups, placed on the lowest-index switches with free ports.
    pub fn with_extra_global_links(
        &self,
        a: GroupId,
        b: GroupId,
        count: usize,
    ) -> Result<Topology, TopologyError> {
        if a == b {
            return Err(TopologyError::InvalidConfig {
                reason: format!("global link endpoints must be distinct groups, got {a} twice"),
            });
        }
        for g in [a, b] {
            if self.group(g).map(|x| x.kind) != Some(GroupKind::Compute) {
                return Err(TopologyError::NotComputeGroup(g));
            }
        }
        let mut used = self.ports_used();
        let mut links = self.links.clone();
        let radix = self.config.switch_radix as u32;
        for _ in 0..count {
            let pick = |g: GroupId, used: &[u32]| {
                self.groups[g.index()]
                    .switches
                    .iter()
                    .copied()
                    .find(|s| used[s.index()] < radix)
            };
            let (Some(sa), Some(sb)) = (pick(a, &used), pick(b, &used)) else {
                return Err(TopologyError::NoFreeGlobalPort { a, b });
            };
            let pa = used[sa.index()];
            used[sa.index()] += 1;
            let pb = used[sb.index()];
            used[sb.index()] += 1;
            links.push(Link {
                id: LinkId::from(links.len()),
                class: LinkClass::GlobalCompute,
                medium: Medium::Optical,
                rate_gbps: self.config.link_rate_gbps,
                a: LinkEnd::Switch { switch: sa, port: pa },
                b: LinkEnd::Switch { switch: sb, port: pb },
            });
        }
        let skeleton = Skeleton {
            groups: self.groups.clone(),
            switches: self.switches.clone(),
            endpoints: self.endpoints.clone(),
            nodes: self.nodes,
        };
        Ok(Self::assemble(self.config.clone(), skeleton, links))
    }

    fn ports_used(&self) -> Vec<u32> {
        let mut used = vec![0u32; self.switches.len()];
        for link in &self.links {
            for end in [link.a, link.b] {
                if let LinkEnd::Switch { switch, port } = end {
                    let u = &mut used[switch.index()];
                    *u = (*u).max(port + 1);
                }
            }
        }
        used
    }

    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, id: GroupId) -> Option<&Group> {
        self.groups.get(id.index())
    }

    pub fn compute_groups(&self) -> impl Iterator<Item = &Group> {
        self.groups.iter().filter(|g| g.kind == GroupKind::Compute)
    }

    pub fn switches(&self) -> &[Switch] {
        &self.switches
    }

    pub fn switch(&self, id: SwitchId) -> &Switch {
        &self.switches[id.index()]
    }

    pub fn endpoints(&self) -> &[Endpoint] {
        &self.endpoints
    }

    pub fn endpoint(&self, id: EndpointId) -> Option<&Endpoint> {
        self.endpoints.get(id.index())
    }

    /// Number of compute nodes.
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    /// Switch-to-switch neighbours of `s` with the parallel links to each.
    pub fn neighbors(&self, s: SwitchId) -> &BTreeMap<SwitchId, Vec<LinkId>> {
        &self.neighbors[s.index()]
    }

    /// Links joining two specific switches (empty when not adjacent).
    pub fn links_between(&self, a: SwitchId, b: SwitchId) -> &[LinkId] {
        self.neighbors[a.index()]
            .get(&b)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Global links (any class) joining two groups, in link-id order.
    pub fn global_links_between(&self, a: GroupId, b: GroupId) -> &[LinkId] {
        self.group_links
            .get(&(a.min(b), a.max(b)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The link attaching endpoint `e` to its switch.
    pub fn injection_link(&self, e: EndpointId) -> Option<LinkId> {
        self.injection.get(e.index()).copied().flatten()
    }

    pub fn group_of(&self, s: SwitchId) -> GroupId {
        self.switches[s.index()].group
    }
}

/// Groups, switches and endpoints implied by a configuration, before links.
#[derive(Debug)]
pub(crate) struct Skeleton {
    pub groups: Vec<Group>,
    pub switches: Vec<Switch>,
    pub endpoints: Vec<Endpoint>,
    pub nodes: usize,
}

impl Skeleton {
    pub(crate) fn new(config: &FabricConfig) -> Self {
        let s_per_g = config.switches_per_group;
        let spc = config.switches_per_chassis;
        let mut groups = Vec::new();
        let mut switches = Vec::new();
        let kinds = std::iter::repeat_n(GroupKind::Compute, config.compute_groups)
            .chain(std::iter::repeat_n(GroupKind::Storage, config.storage_groups))
            .chain(std::iter::repeat_n(GroupKind::Service, config.service_groups));
        for (g, kind) in kinds.enumerate() {
            let ids: Vec<SwitchId> = (0..s_per_g).map(|i| SwitchId::from(g * s_per_g + i)).collect();
            for (i, &id) in ids.iter().enumerate() {
                switches.push(Switch {
                    id,
                    group: GroupId::from(g),
                    index: i,
                    chassis: (kind == GroupKind::Compute).then_some(i / spc),
                });
            }
            let chassis = if kind == GroupKind::Compute {
                ids.chunks(spc).map(<[SwitchId]>::to_vec).collect()
            } else {
                Vec::new()
            };
            groups.push(Group {
                id: GroupId::from(g),
                kind,
                switches: ids,
                chassis,
                mixed_media: kind != GroupKind::Compute,
            });
        }

        let mut endpoints = Vec::new();
        let mut node = 0usize;
        for g in 0..config.compute_groups {
            for c in 0..config.chassis_per_group {
                for n in 0..config.nodes_per_chassis {
                    for k in 0..config.nics_per_node {
                        let slot = (n * config.nics_per_node + k) % spc;
                        endpoints.push(Endpoint {
                            id: EndpointId::from(endpoints.len()),
                            switch: SwitchId::from(g * s_per_g + c * spc + slot),
                            kind: EndpointKind::Compute {
                                node: NodeId::from(node),
                                nic: k,
                            },
                        });
                    }
                    node += 1;
                }
            }
        }
        let mut push_spread = |first_group: usize, groups: usize, per_group: usize, storage: bool| {
            for g in first_group..first_group + groups {
                for e in 0..per_group {
                    endpoints.push(Endpoint {
                        id: EndpointId::from(endpoints.len()),
                        switch: SwitchId::from(g * s_per_g + e % s_per_g),
                        kind: if storage {
                            EndpointKind::Storage { index: e }
                        } else {
                            EndpointKind::Service { index: e }
                        },
                    });
                }
            }
        };
        push_spread(
            config.compute_groups,
            config.storage_groups,
            config.storage_endpoints_per_group,
            true,
        );
        push_spread(
            config.compute_groups + config.storage_groups,
            config.service_groups,
            config.service_endpoints_per_group,
            false,
        );
        Skeleton {
            groups,
            switches,
            endpoints,
            nodes: node,
        }
    }
}

/// Round-robin global port slots of one compute group: slot `i` is sourced
/// from the returned switch index. Every switch contributes one port per
/// round while it still has global capacity.
fn global_slots(config: &FabricConfig) -> Vec<usize> {
    let plan = &config.global_port_plan;
    let s_per_g = config.switches_per_group;
    let rounds = (0..s_per_g).map(|s| plan.ports_on(s)).max().unwrap_or(0);
    let mut slots = Vec::with_capacity(plan.capacity(s_per_g));
    for r in 0..rounds {
        slots.extend((0..s_per_g).filter(|&s| plan.ports_on(s) > r));
    }
    slots
}

struct LinkBuilder {
    rate: u32,
    next_port: Vec<u32>,
    links: Vec<Link>,
}

impl LinkBuilder {
    fn new(config: &FabricConfig, switches: usize) -> Self {
        LinkBuilder {
            rate: config.link_rate_gbps,
            next_port: vec![0; switches],
            links: Vec::new(),
        }
    }

    fn port(&mut self, s: SwitchId) -> LinkEnd {
        let p = &mut self.next_port[s.index()];
        let end = LinkEnd::Switch { switch: s, port: *p };
        *p += 1;
        end
    }

    fn push(&mut self, class: LinkClass, medium: Medium, a: LinkEnd, b: LinkEnd) {
        self.links.push(Link {
            id: LinkId::from(self.links.len()),
            class,
            medium,
            rate_gbps: self.rate,
            a,
            b,
        });
    }

    fn add_between(&mut self, class: LinkClass, medium: Medium, a: SwitchId, b: SwitchId) {
        let (ea, eb) = (self.port(a), self.port(b));
        self.push(class, medium, ea, eb);
    }

    fn add_to_endpoint(&mut self, class: LinkClass, medium: Medium, s: SwitchId, e: EndpointId) {
        let ea = self.port(s);
        self.push(class, medium, ea, LinkEnd::Endpoint(e));
    }
}
