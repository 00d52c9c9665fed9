mod common;

use common::{adjacency, bfs_dragonfly, bfs_unconstrained, random_configs};
use fabricmodel::routing::{
    diameter, min_switch_hops, minimal_routes, route_candidates, valiant_route, DiameterMode, RouteKind, RoutingError,
};
use fabricmodel::topology::{EndpointId, EndpointKind, FabricConfig, GroupId, Topology};

fn compute_endpoints(t: &Topology) -> Vec<EndpointId> {
    t.endpoints()
        .iter()
        .filter(|e| matches!(e.kind, EndpointKind::Compute { .. }))
        .map(|e| e.id)
        .collect()
}

fn walks(t: &Topology, from: fabricmodel::topology::SwitchId, links: &[fabricmodel::topology::LinkId]) -> Option<fabricmodel::topology::SwitchId> {
    links.iter().try_fold(from, |at, &l| t.link(l).other_switch(at))
}

#[test]
fn minimal_hops_match_constrained_bfs_on_random_configs() {
    for cfg in random_configs(40, 7) {
        let t = Topology::build(&cfg).unwrap();
        let adj = adjacency(&t);
        for s in t.switches() {
            let oracle = bfs_dragonfly(&adj, s.id);
            let free = bfs_unconstrained(&adj, s.id);
            for d in t.switches() {
                let hops = min_switch_hops(&t, s.id, d.id);
                assert_eq!(hops, oracle[d.id.index()], "{} -> {} in {cfg:?}", s.id, d.id);
                if let Some(h) = hops {
                    assert!(free[d.id.index()].unwrap() <= h);
                }
            }
        }
    }
}

#[test]
fn every_minimal_route_is_a_connected_walk() {
    let t = Topology::build(&FabricConfig::scaled_aurora(4)).unwrap();
    let eps = compute_endpoints(&t);
    for &src in eps.iter().step_by(97) {
        for &dst in eps.iter().step_by(89) {
            if src == dst {
                continue;
            }
            let routes = minimal_routes(&t, src, dst).unwrap();
            assert!(!routes.is_empty());
            let len = routes[0].switch_hop_count();
            for r in &routes {
                assert_eq!(r.switch_hop_count(), len);
                assert_eq!(r.kind, RouteKind::Minimal);
                assert_eq!(walks(&t, r.src_switch, &r.links), Some(r.dst_switch));
                assert!(r.global_links() <= 1);
                assert!(r.src_injection.is_some() && r.dst_injection.is_some());
            }
            let all = route_candidates(&t, src, dst).unwrap();
            assert!(all.iter().all(|r| r.switch_hop_count() >= len));
        }
    }
}

#[test]
fn valiant_routes_cross_two_global_links() {
    let t = Topology::build(&FabricConfig::scaled_aurora(5)).unwrap();
    let eps = compute_endpoints(&t);
    let (src, dst) = (eps[0], eps[eps.len() - 1]);
    let (gs, gd) = (t.group_of(t.endpoint(src).unwrap().switch), t.group_of(t.endpoint(dst).unwrap().switch));
    for g in t.groups() {
        let r = valiant_route(&t, src, dst, g.id);
        if g.id == gs || g.id == gd {
            assert_eq!(r, Err(RoutingError::BadIntermediate(g.id)));
            continue;
        }
        let r = r.unwrap();
        assert_eq!(r.global_links(), 2);
        assert_eq!(r.intermediate, Some(g.id));
        assert!(r.switch_hop_count() <= 5);
        assert_eq!(walks(&t, r.src_switch, &r.links), Some(r.dst_switch));
    }
    assert!(valiant_route(&t, src, dst, GroupId(999)).is_err());
}

#[test]
fn same_endpoint_is_rejected() {
    let t = Topology::build(&FabricConfig::tiny()).unwrap();
    let e = EndpointId(0);
    assert_eq!(minimal_routes(&t, e, e), Err(RoutingError::SameEndpoint(e)));
    assert!(matches!(minimal_routes(&t, e, EndpointId(10_000)), Err(RoutingError::UnknownEndpoint(_))));
}

#[test]
fn sampled_diameter_is_reproducible_and_bounded() {
    let t = Topology::build(&FabricConfig::scaled_aurora(6)).unwrap();
    let a = diameter(&t, DiameterMode::Sampled { pairs: 2_000, seed: 42 }).unwrap();
    let b = diameter(&t, DiameterMode::Sampled { pairs: 2_000, seed: 42 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.pairs, 2_000);
    let full = diameter(&t, DiameterMode::Exhaustive).unwrap();
    assert!(a.max <= full.max);
    assert_eq!(full.max, 3);
    let n = compute_endpoints(&t).len() as u64;
    assert_eq!(full.pairs, n * (n - 1));
}

#[test]
fn single_group_diameter_is_one() {
    let cfg = FabricConfig {
        compute_groups: 1,
        ..FabricConfig::tiny()
    };
    let t = Topology::build(&cfg).unwrap();
    let stats = diameter(&t, DiameterMode::Exhaustive).unwrap();
    assert_eq!(stats.max, 1);
}
