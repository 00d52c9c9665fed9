use std::collections::HashMap;
use std::fmt;

use super::{EndpointKind, GroupId, GroupKind, LinkClass, LinkEnd, SwitchId, Topology};

/// Ports used on one switch, split by link class. Every link end incident to
/// the switch counts once, so parallel links count individually.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwitchPortUsage {
    pub switch: SwitchId,
    pub injection: usize,
    pub local_intra_chassis: usize,
    pub local_inter_chassis: usize,
    pub global_compute: usize,
    pub global_service: usize,
    pub global_storage: usize,
}

impl SwitchPortUsage {
    pub fn local(&self) -> usize {
        self.local_intra_chassis + self.local_inter_chassis
    }

    pub fn uplink(&self) -> usize {
        self.global_service + self.global_storage
    }

    pub fn total(&self) -> usize {
        self.injection + self.local() + self.global_compute + self.uplink()
    }

    pub fn by_class(&self, class: LinkClass) -> usize {
        match class {
            LinkClass::Injection => self.injection,
            LinkClass::LocalIntraChassis => self.local_intra_chassis,
            LinkClass::LocalInterChassis => self.local_inter_chassis,
            LinkClass::GlobalCompute => self.global_compute,
            LinkClass::GlobalService => self.global_service,
            LinkClass::GlobalStorage => self.global_storage,
        }
    }

    fn bump(&mut self, class: LinkClass) {
        let slot = match class {
            LinkClass::Injection => &mut self.injection,
            LinkClass::LocalIntraChassis => &mut self.local_intra_chassis,
            LinkClass::LocalInterChassis => &mut self.local_inter_chassis,
            LinkClass::GlobalCompute => &mut self.global_compute,
            LinkClass::GlobalService => &mut self.global_service,
            LinkClass::GlobalStorage => &mut self.global_storage,
        };
        *slot += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PortBudgetExceeded {
        switch: SwitchId,
        used: usize,
        radix: usize,
    },
    IntraChassisBudget {
        switch: SwitchId,
        used: usize,
        expected: usize,
    },
    MissingLocalLink {
        group: GroupId,
        a: SwitchId,
        b: SwitchId,
    },
    PairCoverage {
        a: GroupId,
        b: GroupId,
        links: usize,
        expected: usize,
    },
    EndpointAttachment {
        endpoint: usize,
        attachments: usize,
    },
    ForeignChassis {
        endpoint: usize,
        switch: SwitchId,
    },
    RateMismatch {
        link: usize,
        rate_gbps: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PortBudgetExceeded { switch, used, radix } => {
                write!(f, "port budget exceeded on {switch}: {used} > {radix}")
            }
            Violation::IntraChassisBudget { switch, used, expected } => write!(
                f,
                "{switch} spends {used} intra-chassis ports, expected {expected}"
            ),
            Violation::MissingLocalLink { group, a, b } => {
                write!(f, "{group}: no local link between {a} and {b}")
            }
            Violation::PairCoverage { a, b, links, expected } => write!(
                f,
                "groups {a}/{b} joined by {links} global links, expected {expected}"
            ),
            Violation::EndpointAttachment { endpoint, attachments } => {
                write!(f, "endpoint e{endpoint} has {attachments} attachments")
            }
            Violation::ForeignChassis { endpoint, switch } => write!(
                f,
                "endpoint e{endpoint} attaches to {switch} outside its node's chassis"
            ),
            Violation::RateMismatch { link, rate_gbps } => {
                write!(f, "link l{link} runs at {rate_gbps} Gb/s")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub usage: Vec<SwitchPortUsage>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_ports_used(&self) -> usize {
        self.usage.iter().map(SwitchPortUsage::total).max().unwrap_or(0)
    }
}

/// Recounts the wiring from the link set and reports every rule that does
/// not hold. Violations are entries in the report, never errors.
pub fn validate_topology(t: &Topology) -> ValidationReport {
    let cfg = t.config();
    let mut usage: Vec<SwitchPortUsage> = t
        .switches()
        .iter()
        .map(|s| SwitchPortUsage {
            switch: s.id,
            ..Default::default()
        })
        .collect();
    let mut attachments = vec![0usize; t.endpoints().len()];
    let mut pair_links: HashMap<(GroupId, GroupId), usize> = HashMap::new();
    let mut violations = Vec::new();

    for link in t.links() {
        if link.rate_gbps != cfg.link_rate_gbps {
            violations.push(Violation::RateMismatch {
                link: link.id.index(),
                rate_gbps: link.rate_gbps,
            });
        }
        for end in [link.a, link.b] {
            match end {
                LinkEnd::Switch { switch, .. } => usage[switch.index()].bump(link.class),
                LinkEnd::Endpoint(e) => {
                    attachments[e.index()] += 1;
                    let ep = &t.endpoints()[e.index()];
                    let sw = link.a.switch().or(link.b.switch());
                    if let (EndpointKind::Compute { node, .. }, Some(sw)) = (ep.kind, sw) {
                        let chassis = node.index() / cfg.nodes_per_chassis;
                        let home_group = GroupId::from(chassis / cfg.chassis_per_group);
                        let home_chassis = chassis % cfg.chassis_per_group;
                        if t.switch(sw).chassis != Some(home_chassis) || t.group_of(sw) != home_group
                        {
                            violations.push(Violation::ForeignChassis {
                                endpoint: e.index(),
                                switch: sw,
                            });
                        }
                    }
                }
            }
        }
        if link.class == LinkClass::GlobalCompute {
            if let Some((a, b)) = link.switches() {
                let (ga, gb) = (t.group_of(a), t.group_of(b));
                *pair_links.entry((ga.min(gb), ga.max(gb))).or_default() += 1;
            }
        }
    }

    for u in &usage {
        if u.total() > cfg.switch_radix {
            violations.push(Violation::PortBudgetExceeded {
                switch: u.switch,
                used: u.total(),
                radix: cfg.switch_radix,
            });
        }
        if t.switch(u.switch).chassis.is_some()
            && u.local_intra_chassis != cfg.intra_chassis_port_budget
        {
            violations.push(Violation::IntraChassisBudget {
                switch: u.switch,
                used: u.local_intra_chassis,
                expected: cfg.intra_chassis_port_budget,
            });
        }
    }

    for group in t.groups() {
        for (i, &a) in group.switches.iter().enumerate() {
            for &b in &group.switches[i + 1..] {
                let local = t
                    .links_between(a, b)
                    .iter()
                    .filter(|&&l| t.link(l).class.is_local())
                    .count();
                if local == 0 {
                    violations.push(Violation::MissingLocalLink { group: group.id, a, b });
                }
            }
        }
    }

    let compute: Vec<GroupId> = t
        .groups()
        .iter()
        .filter(|g| g.kind == GroupKind::Compute)
        .map(|g| g.id)
        .collect();
    for (i, &a) in compute.iter().enumerate() {
        for &b in &compute[i + 1..] {
            let links = pair_links.get(&(a, b)).copied().unwrap_or(0);
            if links != cfg.global_links_per_compute_pair {
                violations.push(Violation::PairCoverage {
                    a,
                    b,
                    links,
                    expected: cfg.global_links_per_compute_pair,
                });
            }
        }
    }

    for (e, &n) in attachments.iter().enumerate() {
        if n != 1 {
            violations.push(Violation::EndpointAttachment {
                endpoint: e,
                attachments: n,
            });
        }
    }

    ValidationReport { usage, violations }
}
