//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use fabricmodel::perfmodel::CostParams;
use fabricmodel::topology::{FabricConfig, GlobalPortPlan, LinkEnd, SwitchId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Discrete-event allreduce schedules.
//
// Every rank has a clock and, per chunk, the set of ranks whose contribution
// it holds. A message leaves when its sender is ready, lands `alpha + s*beta`
// later, and a reduction of `s` bytes costs `s*gamma`. At the end every rank
// must hold every chunk with all contributions.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Link {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Link {
    pub fn from_params(p: &CostParams, nics: usize) -> Self {
        Link {
            alpha: p.alpha,
            beta: p.effective_beta(nics),
            gamma: p.gamma,
        }
    }

    fn transfer(&self, bytes: f64) -> f64 {
        self.alpha + bytes * self.beta
    }
}

/// `have[rank][chunk]` is a bitmask of contributing ranks.
struct State {
    clock: Vec<f64>,
    have: Vec<Vec<u64>>,
}

impl State {
    fn new(p: usize, chunks: usize) -> Self {
        assert!(p <= 64);
        State {
            clock: vec![0.0; p],
            have: (0..p).map(|r| vec![1u64 << r; chunks]).collect(),
        }
    }

    fn done(&self, p: usize) -> bool {
        let full = if p == 64 { u64::MAX } else { (1u64 << p) - 1 };
        self.have.iter().all(|row| row.iter().all(|&m| m == full))
    }

    fn finish(&self) -> f64 {
        self.clock.iter().copied().fold(0.0, f64::max)
    }
}

/// One synchronous round: `msgs` are `(from, to, chunks, reduce)`.
/// Sends read the sender's state from before the round.
fn round(st: &mut State, link: &Link, chunk_bytes: f64, msgs: &[(usize, usize, Vec<usize>, bool)]) {
    let before_clock = st.clock.clone();
    let before_have = st.have.clone();
    let mut next = st.clock.clone();
    for (from, to, chunks, reduce) in msgs {
        let bytes = chunks.len() as f64 * chunk_bytes;
        let arrive = before_clock[*from] + link.transfer(bytes);
        let mut t = next[*to].max(arrive);
        for &c in chunks {
            let incoming = before_have[*from][c];
            if *reduce {
                assert_eq!(st.have[*to][c] & incoming, 0, "double-counted contribution");
                st.have[*to][c] |= incoming;
            } else {
                st.have[*to][c] = incoming;
            }
        }
        if *reduce {
            t += bytes * link.gamma;
        }
        next[*to] = next[*to].max(t);
    }
    // a rank that only sent this round still waits for its own send
    for (from, _, chunks, _) in msgs {
        let bytes = chunks.len() as f64 * chunk_bytes;
        next[*from] = next[*from].max(before_clock[*from] + link.transfer(bytes));
    }
    st.clock = next;
}

/// Ring reduce-scatter then ring allgather, `p` chunks.
pub fn des_ring(p: usize, n: f64, link: &Link) -> f64 {
    if p == 1 {
        return 0.0;
    }
    let mut st = State::new(p, p);
    let s = n / p as f64;
    for step in 0..p - 1 {
        let msgs: Vec<_> = (0..p)
            .map(|r| (r, (r + 1) % p, vec![(r + p - step) % p], true))
            .collect();
        round(&mut st, link, s, &msgs);
    }
    for step in 0..p - 1 {
        let msgs: Vec<_> = (0..p)
            .map(|r| (r, (r + 1) % p, vec![(r + 1 + p - step) % p], false))
            .collect();
        round(&mut st, link, s, &msgs);
    }
    assert!(st.done(p), "ring schedule did not complete the reduction");
    st.finish()
}

/// Recursive doubling: full-vector exchange with partner `r ^ 2^k`.
pub fn des_recursive_doubling(p: usize, n: f64, link: &Link) -> f64 {
    assert!(p.is_power_of_two());
    let mut st = State::new(p, 1);
    let mut dist = 1;
    while dist < p {
        let msgs: Vec<_> = (0..p).map(|r| (r, r ^ dist, vec![0], true)).collect();
        round(&mut st, link, n, &msgs);
        dist *= 2;
    }
    assert!(st.done(p));
    st.finish()
}

/// Recursive halving reduce-scatter then recursive doubling allgather.
pub fn des_rabenseifner(p: usize, n: f64, link: &Link) -> f64 {
    assert!(p.is_power_of_two());
    if p == 1 {
        return 0.0;
    }
    let mut st = State::new(p, p);
    let s = n / p as f64;
    // segment [lo, hi) of chunks each rank is responsible for
    let mut seg: Vec<(usize, usize)> = vec![(0, p); p];
    let mut dist = p / 2;
    while dist >= 1 {
        let mut msgs = Vec::new();
        let mut next_seg = seg.clone();
        for r in 0..p {
            let (lo, hi) = seg[r];
            let mid = (lo + hi) / 2;
            let partner = r ^ dist;
            // lower rank keeps the lower half
            let (keep, give) = if r & dist == 0 { ((lo, mid), (mid, hi)) } else { ((mid, hi), (lo, mid)) };
            msgs.push((r, partner, (give.0..give.1).collect::<Vec<_>>(), true));
            next_seg[r] = keep;
        }
        round(&mut st, link, s, &msgs);
        seg = next_seg;
        dist /= 2;
    }
    let mut dist = 1;
    while dist < p {
        let mut msgs = Vec::new();
        let mut next_seg = seg.clone();
        for r in 0..p {
            let (lo, hi) = seg[r];
            let partner = r ^ dist;
            let (plo, phi) = seg[partner];
            msgs.push((r, partner, (lo..hi).collect::<Vec<_>>(), false));
            next_seg[r] = (lo.min(plo), hi.max(phi));
        }
        round(&mut st, link, s, &msgs);
        seg = next_seg;
        dist *= 2;
    }
    assert!(st.done(p));
    st.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Ring,
    RecursiveDoubling,
    Rabenseifner,
}

pub fn des_flat(schedule: Schedule, p: usize, n: f64, link: &Link) -> f64 {
    match schedule {
        Schedule::Ring => des_ring(p, n, link),
        Schedule::RecursiveDoubling => des_recursive_doubling(p, n, link),
        Schedule::Rabenseifner => des_rabenseifner(p, n, link),
    }
}

/// Two-level schedule over `nodes x r` ranks: direct in-node reduce-scatter,
/// the flat schedule across nodes per local shard, direct in-node allgather.
/// Simulated per rank with explicit message events.
pub fn des_hierarchical(schedule: Schedule, nodes: usize, r: usize, n: f64, up: &Link, out: &Link) -> f64 {
    let shard = n / r as f64;
    let mut clock = vec![vec![0.0f64; r]; nodes];
    if r > 1 {
        for node in clock.iter_mut() {
            let start = node.clone();
            for (j, c) in node.iter_mut().enumerate() {
                // shards from the other r-1 ranks arrive together; reduce each
                let mut t = *c;
                for (i, &s) in start.iter().enumerate() {
                    if i != j {
                        t = t.max(s + up.transfer(shard));
                    }
                }
                for _ in 1..r {
                    t += shard * up.gamma;
                }
                *c = t;
            }
        }
    }
    if nodes > 1 {
        for j in 0..r {
            let begin = (0..nodes).map(|k| clock[k][j]).fold(0.0, f64::max);
            let elapsed = des_flat(schedule, nodes, shard, out);
            for node in clock.iter_mut() {
                node[j] = begin + elapsed;
            }
        }
    }
    if r > 1 {
        for node in clock.iter_mut() {
            let start = node.clone();
            for (j, c) in node.iter_mut().enumerate() {
                for (i, &s) in start.iter().enumerate() {
                    if i != j {
                        *c = c.max(s + up.transfer(shard));
                    }
                }
            }
        }
    }
    clock.iter().flatten().copied().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Switch-graph BFS.
// ---------------------------------------------------------------------------

fn switch_edges(t: &Topology, s: SwitchId) -> Vec<(SwitchId, bool)> {
    let mut out = Vec::new();
    for link in t.links() {
        let (LinkEnd::Switch { switch: a, .. }, LinkEnd::Switch { switch: b, .. }) = (link.a, link.b) else {
            continue;
        };
        if a == s {
            out.push((b, link.class.is_global()));
        } else if b == s {
            out.push((a, link.class.is_global()));
        }
    }
    out
}

/// Adjacency lists `(neighbor, is_global)` for every switch.
pub fn adjacency(t: &Topology) -> Vec<Vec<(SwitchId, bool)>> {
    let mut adj = vec![Vec::new(); t.switches().len()];
    for link in t.links() {
        if let (LinkEnd::Switch { switch: a, .. }, LinkEnd::Switch { switch: b, .. }) = (link.a, link.b) {
            let g = link.class.is_global();
            adj[a.index()].push((b, g));
            adj[b.index()].push((a, g));
        }
    }
    adj
}

/// Plain shortest switch-hop distances from `s`.
pub fn bfs_unconstrained(adj: &[Vec<(SwitchId, bool)>], s: SwitchId) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[s.index()] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        let d = dist[u.index()].unwrap();
        for &(v, _) in &adj[u.index()] {
            if dist[v.index()].is_none() {
                dist[v.index()] = Some(d + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Shortest distances over paths spelling `local? global? local?`.
/// Automaton states: 0 start, 1 after the first local hop, 2 after the
/// global hop, 3 after the final local hop.
pub fn bfs_dragonfly(adj: &[Vec<(SwitchId, bool)>], s: SwitchId) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut dist = vec![[None::<usize>; 4]; n];
    dist[s.index()][0] = Some(0);
    let mut q = VecDeque::from([(s, 0usize)]);
    while let Some((u, state)) = q.pop_front() {
        let d = dist[u.index()][state].unwrap();
        for &(v, global) in &adj[u.index()] {
            let next = match (state, global) {
                (0, false) => 1,
                (0, true) | (1, true) => 2,
                (2, false) => 3,
                _ => continue,
            };
            if dist[v.index()][next].is_none() {
                dist[v.index()][next] = Some(d + 1);
                q.push_back((v, next));
            }
        }
    }
    dist.iter().map(|states| states.iter().flatten().min().copied()).collect()
}

pub fn neighbors_of(t: &Topology, s: SwitchId) -> Vec<(SwitchId, bool)> {
    switch_edges(t, s)
}

// ---------------------------------------------------------------------------
// Random small configurations that satisfy the wiring preconditions.
// ---------------------------------------------------------------------------

pub fn random_config(rng: &mut ChaCha8Rng) -> FabricConfig {
    let switches_per_chassis = [2usize, 4][rng.gen_range(0..2)];
    let chassis_per_group = rng.gen_range(1..=3);
    let switches = switches_per_chassis * chassis_per_group;
    let compute_groups: usize = rng.gen_range(1..=9);
    let global_links_per_compute_pair = rng.gen_range(1..=3);
    let needed = (compute_groups - 1) * global_links_per_compute_pair;
    let extra_ports: usize = rng.gen_range(0..=2);
    let extra_count = rng.gen_range(0..=switches);
    let extra_start = rng.gen_range(0..=switches - extra_count);
    let extra_cap = extra_ports * extra_count;
    let base_ports = needed.saturating_sub(extra_cap).div_ceil(switches) + rng.gen_range(0..=1);
    let storage_groups = rng.gen_range(0..=2usize).min(switches - 1);
    let service_groups = rng.gen_range(0..=1usize).min(switches - storage_groups);
    FabricConfig {
        compute_groups,
        storage_groups,
        service_groups,
        switches_per_group: switches,
        chassis_per_group,
        switches_per_chassis,
        nodes_per_chassis: rng.gen_range(1..=4),
        nics_per_node: switches_per_chassis * rng.gen_range(1..=2),
        link_rate_gbps: [100u32, 200, 400][rng.gen_range(0..3)],
        switch_radix: 64,
        global_links_per_compute_pair,
        service_uplinks_per_compute_group: rng.gen_range(1..=2),
        storage_uplinks_per_io_group: rng.gen_range(1..=2),
        storage_endpoints_per_group: rng.gen_range(0..=4),
        service_endpoints_per_group: rng.gen_range(0..=2),
        intra_chassis_port_budget: switches_per_chassis - 1 + rng.gen_range(0..=1),
        global_port_plan: GlobalPortPlan {
            base_ports,
            extra_ports,
            extra_switches: extra_start..extra_start + extra_count,
        },
    }
}

pub fn random_configs(count: usize, seed: u64) -> Vec<FabricConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_config(&mut rng)).collect()
}
