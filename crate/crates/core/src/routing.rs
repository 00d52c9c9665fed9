//! Minimal and Valiant routes over a dragonfly [`Topology`].
//!
//! A minimal route follows `local? global? local?` between the source and
//! destination switches and has the fewest switch hops among such routes.
//! A Valiant route detours through an intermediate group and therefore
//! carries exactly two global links. Which family to use is up to the caller.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::{EndpointId, EndpointKind, GroupId, LinkClass, LinkId, SwitchId, Topology};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RoutingError {
    #[error("source and destination are the same endpoint {0}")]
    SameEndpoint(EndpointId),
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(EndpointId),
    #[error("no local-global-local route from {src} to {dst}")]
    Unreachable { src: SwitchId, dst: SwitchId },
    #[error("{0} cannot serve as an intermediate group for this pair")]
    BadIntermediate(GroupId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteKind {
    Minimal,
    Valiant,
}

impl RouteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteKind::Minimal => "minimal",
            RouteKind::Valiant => "valiant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub src: EndpointId,
    pub dst: EndpointId,
    pub src_switch: SwitchId,
    pub dst_switch: SwitchId,
    /// Switch-to-switch links in traversal order.
    pub links: Vec<LinkId>,
    pub classes: Vec<LinkClass>,
    pub kind: RouteKind,
    pub intermediate: Option<GroupId>,
    pub src_injection: Option<LinkId>,
    pub dst_injection: Option<LinkId>,
}

impl Route {
    pub fn switch_hop_count(&self) -> usize {
        self.links.len()
    }

    pub fn global_links(&self) -> usize {
        self.classes.iter().filter(|c| c.is_global()).count()
    }
}

fn endpoint_switch(t: &Topology, e: EndpointId) -> Result<SwitchId, RoutingError> {
    t.endpoint(e)
        .map(|ep| ep.switch)
        .ok_or(RoutingError::UnknownEndpoint(e))
}

fn local_links(t: &Topology, a: SwitchId, b: SwitchId) -> impl Iterator<Item = LinkId> + '_ {
    t.links_between(a, b)
        .iter()
        .copied()
        .filter(move |&l| t.link(l).class.is_local())
}

/// Every `local? global? local?` switch path from `s` to `d`, with parallel
/// links expanded into distinct paths. Same-switch pairs yield one empty path.
pub fn switch_paths(t: &Topology, s: SwitchId, d: SwitchId) -> Vec<Vec<LinkId>> {
    if s == d {
        return vec![Vec::new()];
    }
    let (gs, gd) = (t.group_of(s), t.group_of(d));
    if gs == gd {
        return local_links(t, s, d).map(|l| vec![l]).collect();
    }
    let mut paths = Vec::new();
    for &g in t.global_links_between(gs, gd) {
        let Some((x, y)) = t.link(g).switches() else { continue };
        let (a, b) = if t.group_of(x) == gs { (x, y) } else { (y, x) };
        let heads: Vec<Vec<LinkId>> = if a == s {
            vec![Vec::new()]
        } else {
            local_links(t, s, a).map(|l| vec![l]).collect()
        };
        let tails: Vec<Vec<LinkId>> = if b == d {
            vec![Vec::new()]
        } else {
            local_links(t, b, d).map(|l| vec![l]).collect()
        };
        for head in &heads {
            for tail in &tails {
                let mut p = head.clone();
                p.push(g);
                p.extend(tail);
                paths.push(p);
            }
        }
    }
    paths
}

/// Fewest switch hops on a `local? global? local?` path, without building
/// the paths.
pub fn min_switch_hops(t: &Topology, s: SwitchId, d: SwitchId) -> Option<usize> {
    if s == d {
        return Some(0);
    }
    let (gs, gd) = (t.group_of(s), t.group_of(d));
    if gs == gd {
        return local_links(t, s, d).next().map(|_| 1);
    }
    t.global_links_between(gs, gd)
        .iter()
        .filter_map(|&g| {
            let (x, y) = t.link(g).switches()?;
            let (a, b) = if t.group_of(x) == gs { (x, y) } else { (y, x) };
            let head = if a == s { 0 } else { local_links(t, s, a).next().map(|_| 1)? };
            let tail = if b == d { 0 } else { local_links(t, b, d).next().map(|_| 1)? };
            Some(head + 1 + tail)
        })
        .min()
}

fn make_route(
    t: &Topology,
    src: EndpointId,
    dst: EndpointId,
    links: Vec<LinkId>,
    kind: RouteKind,
    intermediate: Option<GroupId>,
) -> Result<Route, RoutingError> {
    Ok(Route {
        src,
        dst,
        src_switch: endpoint_switch(t, src)?,
        dst_switch: endpoint_switch(t, dst)?,
        classes: links.iter().map(|&l| t.link(l).class).collect(),
        links,
        kind,
        intermediate,
        src_injection: t.injection_link(src),
        dst_injection: t.injection_link(dst),
    })
}

fn check_pair(t: &Topology, src: EndpointId, dst: EndpointId) -> Result<(SwitchId, SwitchId), RoutingError> {
    if src == dst {
        return Err(RoutingError::SameEndpoint(src));
    }
    Ok((endpoint_switch(t, src)?, endpoint_switch(t, dst)?))
}

/// All `local? global? local?` routes between two endpoints, minimal or not.
pub fn route_candidates(t: &Topology, src: EndpointId, dst: EndpointId) -> Result<Vec<Route>, RoutingError> {
    let (s, d) = check_pair(t, src, dst)?;
    switch_paths(t, s, d)
        .into_iter()
        .map(|p| make_route(t, src, dst, p, RouteKind::Minimal, None))
        .collect()
}

/// The routes of minimum switch-hop count. Never empty on success.
pub fn minimal_routes(t: &Topology, src: EndpointId, dst: EndpointId) -> Result<Vec<Route>, RoutingError> {
    let (s, d) = check_pair(t, src, dst)?;
    let paths = switch_paths(t, s, d);
    let best = paths
        .iter()
        .map(Vec::len)
        .min()
        .ok_or(RoutingError::Unreachable { src: s, dst: d })?;
    paths
        .into_iter()
        .filter(|p| p.len() == best)
        .map(|p| make_route(t, src, dst, p, RouteKind::Minimal, None))
        .collect()
}

/// Route through `intermediate`: the shortest `local? global` hop into the
/// intermediate group followed by a minimal route from the landing switch.
/// Ties go to the lowest link ids.
pub fn valiant_route(
    t: &Topology,
    src: EndpointId,
    dst: EndpointId,
    intermediate: GroupId,
) -> Result<Route, RoutingError> {
    let (s, d) = check_pair(t, src, dst)?;
    let (gs, gd) = (t.group_of(s), t.group_of(d));
    if intermediate == gs || intermediate == gd || t.group(intermediate).is_none() {
        return Err(RoutingError::BadIntermediate(intermediate));
    }
    let mut best: Option<(usize, Vec<LinkId>, SwitchId)> = None;
    for &g in t.global_links_between(gs, intermediate) {
        let Some((x, y)) = t.link(g).switches() else { continue };
        let (a, landing) = if t.group_of(x) == gs { (x, y) } else { (y, x) };
        let head = if a == s {
            Vec::new()
        } else {
            match local_links(t, s, a).next() {
                Some(l) => vec![l],
                None => continue,
            }
        };
        let Some(onward) = min_switch_hops(t, landing, d) else { continue };
        let total = head.len() + 1 + onward;
        if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
            let mut links = head;
            links.push(g);
            best = Some((total, links, landing));
        }
    }
    let (_, mut links, landing) = best.ok_or(RoutingError::Unreachable { src: s, dst: d })?;
    let tail = switch_paths(t, landing, d)
        .into_iter()
        .min_by_key(Vec::len)
        .ok_or(RoutingError::Unreachable { src: landing, dst: d })?;
    links.extend(tail);
    make_route(t, src, dst, links, RouteKind::Valiant, Some(intermediate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMode {
    /// Every ordered pair of distinct compute endpoints.
    Exhaustive,
    /// `pairs` random ordered pairs drawn with a seeded generator.
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopStats {
    pub max: usize,
    /// Minimal switch-hop count -> number of endpoint pairs.
    pub histogram: BTreeMap<usize, u64>,
    pub pairs: u64,
}

/// Minimal switch-hop statistics over compute endpoint pairs.
pub fn diameter(t: &Topology, mode: DiameterMode) -> Result<HopStats, RoutingError> {
    let compute: Vec<(EndpointId, SwitchId)> = t
        .endpoints()
        .iter()
        .filter(|e| matches!(e.kind, EndpointKind::Compute { .. }))
        .map(|e| (e.id, e.switch))
        .collect();
    let mut histogram = BTreeMap::new();
    let hops = |s, d| min_switch_hops(t, s, d).ok_or(RoutingError::Unreachable { src: s, dst: d });
    match mode {
        DiameterMode::Exhaustive => {
            // hop count only depends on the switch pair
            let mut per_switch: BTreeMap<SwitchId, u64> = BTreeMap::new();
            for &(_, s) in &compute {
                *per_switch.entry(s).or_default() += 1;
            }
            for (&s, &ns) in &per_switch {
                for (&d, &nd) in &per_switch {
                    let weight = if s == d { ns * (ns - 1) } else { ns * nd };
                    if weight > 0 {
                        *histogram.entry(hops(s, d)?).or_default() += weight;
                    }
                }
            }
        }
        DiameterMode::Sampled { pairs, seed } => {
            if compute.len() >= 2 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..pairs {
                    let i = rng.gen_range(0..compute.len());
                    let mut j = rng.gen_range(0..compute.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    *histogram.entry(hops(compute[i].1, compute[j].1)?).or_default() += 1;
                }
            }
        }
    }
    Ok(HopStats {
        max: histogram.keys().next_back().copied().unwrap_or(0),
        pairs: histogram.values().sum(),
        histogram,
    })
}

/// Route dump: `src,dst,kind,switch_hops,links` with links `;`-separated.
pub fn write_routes_csv<W: Write>(routes: &[Route], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "kind", "switch_hops", "links"])?;
    for r in routes {
        let links: Vec<String> = r.links.iter().map(ToString::to_string).collect();
        w.write_record([
            r.src.0.to_string(),
            r.dst.0.to_string(),
            r.kind.as_str().to_string(),
            r.switch_hop_count().to_string(),
            links.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::FabricConfig;

    fn scaled(groups: usize) -> Topology {
        Topology::build(&FabricConfig::scaled_aurora(groups)).unwrap()
    }

    #[test]
    fn same_switch_is_zero_hops() {
        let t = scaled(2);
        // NICs 0 and 4 of node 0 share switch 0
        let routes = minimal_routes(&t, EndpointId(0), EndpointId(4)).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].switch_hop_count(), 0);
        assert!(routes[0].src_injection.is_some());
    }

    #[test]
    fn doubled_chassis_pair_gives_two_routes() {
        let t = scaled(2);
        // node 0: NIC 0 on switch 0, NIC 1 on switch 1
        let routes = minimal_routes(&t, EndpointId(0), EndpointId(1)).unwrap();
        assert_eq!(routes.len(), 2);
        assert!(routes.iter().all(|r| r.switch_hop_count() == 1));
        assert_ne!(routes[0].links, routes[1].links);
    }

    #[test]
    fn same_endpoint_rejected() {
        let t = scaled(2);
        assert_eq!(
            minimal_routes(&t, EndpointId(3), EndpointId(3)),
            Err(RoutingError::SameEndpoint(EndpointId(3)))
        );
        assert_eq!(
            minimal_routes(&t, EndpointId(3), EndpointId(999_999)),
            Err(RoutingError::UnknownEndpoint(EndpointId(999_999)))
        );
    }

    #[test]
    fn valiant_preconditions() {
        let t = scaled(3);
        let far = EndpointId(512);
        assert_eq!(
            valiant_route(&t, EndpointId(0), far, GroupId(1)),
            Err(RoutingError::BadIntermediate(GroupId(1)))
        );
        assert_eq!(
            valiant_route(&t, EndpointId(0), far, GroupId(9)),
            Err(RoutingError::BadIntermediate(GroupId(9)))
        );
        let r = valiant_route(&t, EndpointId(0), far, GroupId(2)).unwrap();
        assert_eq!(r.global_links(), 2);
        assert_eq!(r.intermediate, Some(GroupId(2)));
    }

    #[test]
    fn single_group_diameter_is_one() {
        let t = scaled(1);
        let stats = diameter(&t, DiameterMode::Exhaustive).unwrap();
        assert_eq!(stats.max, 1);
        let n = t.endpoints().len() as u64;
        assert_eq!(stats.pairs, n * (n - 1));
    }

    #[test]
    fn sampled_diameter_is_reproducible() {
        let t = scaled(4);
        let mode = DiameterMode::Sampled { pairs: 2000, seed: 7 };
        assert_eq!(diameter(&t, mode).unwrap(), diameter(&t, mode).unwrap());
    }

    #[test]
    fn route_csv_format() {
        let t = scaled(2);
        let routes = minimal_routes(&t, EndpointId(0), EndpointId(1)).unwrap();
        let mut buf = Vec::new();
        write_routes_csv(&routes[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = format!("src,dst,kind,switch_hops,links\n0,1,minimal,1,{}\n", routes[0].links[0]);
        assert_eq!(text, expected);
    }
}
