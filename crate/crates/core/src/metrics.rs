//! Aggregate fabric bandwidth: injection, global and bisection.
//!
//! Bisection is the balanced compute-group cut; storage and service links
//! never cross it. The analytic figure is cross-checked by
//! [`min_cut_oracle`], which enumerates every balanced bipartition.

use std::fmt;

use crate::topology::{EndpointKind, GroupId, LinkClass, LinkEnd, Topology};
use crate::units::gbps_to_bytes_per_sec;

/// Largest compute-group count the exhaustive oracle accepts.
pub const ORACLE_MAX_GROUPS: usize = 12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("analytic bisection needs an even number of compute groups, got {0}")]
    OddGroupCount(usize),
    #[error("exhaustive min-cut supports at most {max} compute groups, got {groups}")]
    TooLarge { groups: usize, max: usize },
}

/// How a full-duplex link crossing a cut is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// One direction per link.
    Unidirectional,
    /// Both directions of every full-duplex link.
    FullDuplexDoubled,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Unidirectional => 1.0,
            Convention::FullDuplexDoubled => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Unidirectional => "unidirectional",
            Convention::FullDuplexDoubled => "full_duplex_doubled",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthReport {
    /// Bytes/s, one direction per injection link.
    pub injection: f64,
    /// Bytes/s, both directions of every global compute link.
    pub global: f64,
    /// Bytes/s under `convention`; `None` with an odd compute-group count.
    pub bisection: Option<f64>,
    pub convention: Convention,
}

pub fn bandwidth_report(t: &Topology, convention: Convention) -> BandwidthReport {
    BandwidthReport {
        injection: injection_bandwidth(t),
        global: global_bandwidth(t),
        bisection: bisection_bandwidth(t, convention).ok(),
        convention,
    }
}

/// Sum of per-direction rates over compute-node injection links.
pub fn injection_bandwidth(t: &Topology) -> f64 {
    t.links()
        .iter()
        .filter(|l| l.class == LinkClass::Injection)
        .filter(|l| {
            [l.a, l.b].iter().any(|end| match end {
                LinkEnd::Endpoint(e) => matches!(
                    t.endpoint(*e).map(|ep| ep.kind),
                    Some(EndpointKind::Compute { .. })
                ),
                LinkEnd::Switch { .. } => false,
            })
        })
        .map(|l| l.bytes_per_sec())
        .sum()
}

/// Global compute bandwidth: every global compute link contributes its rate
/// once in each direction, which equals the summed global egress of all
/// compute groups.
pub fn global_bandwidth(t: &Topology) -> f64 {
    t.links()
        .iter()
        .filter(|l| l.class == LinkClass::GlobalCompute)
        .map(|l| 2.0 * l.bytes_per_sec())
        .sum()
}

/// Balanced compute-group cut of a uniform dragonfly:
/// `(G/2)^2 * links_per_pair * rate`, doubled for full-duplex counting.
pub fn bisection_bandwidth(t: &Topology, convention: Convention) -> Result<f64, MetricsError> {
    let cfg = t.config();
    let g = cfg.compute_groups;
    if g % 2 == 1 || g == 0 {
        return Err(MetricsError::OddGroupCount(g));
    }
    let half = (g / 2) as f64;
    let rate = gbps_to_bytes_per_sec(cfg.link_rate_gbps as f64);
    Ok(half * half * cfg.global_links_per_compute_pair as f64 * rate * convention.factor())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub bytes_per_sec: f64,
    /// Compute groups on the side containing group 0.
    pub side: Vec<GroupId>,
}

/// Minimum cut capacity over all balanced bipartitions of the compute groups,
/// read from the actual global links. Odd counts split `floor/ceil`.
pub fn min_cut_oracle(t: &Topology, convention: Convention) -> Result<MinCut, MetricsError> {
    let groups: Vec<GroupId> = t.compute_groups().map(|g| g.id).collect();
    let n = groups.len();
    if n > ORACLE_MAX_GROUPS {
        return Err(MetricsError::TooLarge {
            groups: n,
            max: ORACLE_MAX_GROUPS,
        });
    }
    let pos = |g: GroupId| groups.iter().position(|&x| x == g);
    // capacity[i][j]: bytes/s of global compute links between groups i and j
    let mut capacity = vec![vec![0.0f64; n]; n];
    for link in t.links().iter().filter(|l| l.class == LinkClass::GlobalCompute) {
        let Some((a, b)) = link.switches() else { continue };
        if let (Some(i), Some(j)) = (pos(t.group_of(a)), pos(t.group_of(b))) {
            capacity[i][j] += link.bytes_per_sec();
            capacity[j][i] += link.bytes_per_sec();
        }
    }
    if n < 2 {
        return Ok(MinCut {
            bytes_per_sec: 0.0,
            side: groups,
        });
    }

    let sizes = [n / 2, n.div_ceil(2)];
    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1 << n) {
        if mask & 1 == 0 || !sizes.contains(&(mask.count_ones() as usize)) {
            continue;
        }
        let mut cut = 0.0;
        for i in (0..n).filter(|i| mask & (1 << i) != 0) {
            for j in (0..n).filter(|j| mask & (1 << j) == 0) {
                cut += capacity[i][j];
            }
        }
        if best.is_none_or(|(b, _)| cut < b) {
            best = Some((cut, mask));
        }
    }
    let (cut, mask) = best.expect("at least one balanced partition");
    Ok(MinCut {
        bytes_per_sec: cut * convention.factor(),
        side: (0..n).filter(|i| mask & (1 << i) != 0).map(|i| groups[i]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::FabricConfig;

    fn small(groups: usize) -> Topology {
        Topology::build(&FabricConfig::scaled_aurora(groups)).unwrap()
    }

    #[test]
    fn tiny_values() {
        let t = Topology::build(&FabricConfig::tiny()).unwrap();
        assert_eq!(injection_bandwidth(&t), 200e9);
        assert_eq!(global_bandwidth(&t), 100e9);
        assert_eq!(bisection_bandwidth(&t, Convention::FullDuplexDoubled).unwrap(), 100e9);
        assert_eq!(bisection_bandwidth(&t, Convention::Unidirectional).unwrap(), 50e9);
        let oracle = min_cut_oracle(&t, Convention::FullDuplexDoubled).unwrap();
        assert_eq!(oracle.bytes_per_sec, 100e9);
    }

    #[test]
    fn odd_group_count() {
        let t = small(3);
        assert_eq!(
            bisection_bandwidth(&t, Convention::Unidirectional),
            Err(MetricsError::OddGroupCount(3))
        );
        // 1 vs 2 groups: 2 pairs cross, 2 links each
        let oracle = min_cut_oracle(&t, Convention::Unidirectional).unwrap();
        assert_eq!(oracle.bytes_per_sec, 4.0 * 25e9);
    }

    #[test]
    fn four_groups_oracle_matches_formula() {
        let t = small(4);
        for conv in [Convention::Unidirectional, Convention::FullDuplexDoubled] {
            let oracle = min_cut_oracle(&t, conv).unwrap();
            assert_eq!(oracle.bytes_per_sec, bisection_bandwidth(&t, conv).unwrap());
        }
    }

    #[test]
    fn too_large() {
        let t = small(14);
        assert_eq!(
            min_cut_oracle(&t, Convention::Unidirectional),
            Err(MetricsError::TooLarge { groups: 14, max: 12 })
        );
    }

    #[test]
    fn link_rate_is_linear() {
        let mut c = FabricConfig::scaled_aurora(4);
        let full = injection_bandwidth(&Topology::build(&c).unwrap());
        c.link_rate_gbps = 100;
        let half = injection_bandwidth(&Topology::build(&c).unwrap());
        assert_eq!(half * 2.0, full);
    }
}
