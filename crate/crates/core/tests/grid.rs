use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rhythmic_core::grid::*;

fn count(net: &GridNetwork, f: impl Fn(&NodeKind) -> bool) -> usize {
    net.nodes.iter().filter(|n| f(&n.kind)).count()
}

#[test]
fn smallest_grid_counts() {
    let net = build_grid(2, 2, 150.0, 2, 0).unwrap();
    assert_eq!(count(&net, |k| matches!(k, NodeKind::Crossroads { .. })), 4);
    assert_eq!(net.entrances().len(), 4);
    assert_eq!(net.exits().len(), 4);
    assert_eq!(net.perimeter_cycle().len(), 4);
}

#[test]
fn four_by_four_counts() {
    let net = build_grid(4, 4, 150.0, 2, 0).unwrap();
    assert_eq!(count(&net, |k| matches!(k, NodeKind::Crossroads { .. })), 16);
    assert_eq!(net.entrances().len(), 8);
    assert_eq!(net.exits().len(), 8);
}

#[test]
fn one_junction_per_segment() {
    let net = build_grid(6, 6, 150.0, 2, 1).unwrap();
    let blocks = net.links.iter().filter(|l| l.kind == LinkKind::Block).count();
    assert_eq!(blocks, 12 * 5);
    assert_eq!(net.junctions().len(), blocks);
    for l in net.links.iter().filter(|l| l.kind == LinkKind::Block) {
        assert_eq!(l.junctions.len(), 1);
        assert!((l.junctions[0].1 - 75.0).abs() < 1e-12);
    }
}

#[test]
fn rejects_bad_dimensions() {
    assert!(build_grid(3, 2, 150.0, 2, 0).is_err());
    assert!(build_grid(2, 0, 150.0, 2, 0).is_err());
    assert!(build_grid(2, 2, 0.0, 2, 0).is_err());
    assert!(build_grid(2, 2, -5.0, 2, 0).is_err());
}

#[test]
fn crossroads_have_one_link_of_each_kind() {
    let net = build_grid(6, 4, 150.0, 2, 1).unwrap();
    for &c in net.crossroads_ids() {
        let mut inc = [0; 2];
        let mut out = [0; 2];
        for &p in &net.in_pieces[c] {
            let s = net.links[net.pieces[p].link].street;
            inc[(net.streets[s].axis == Axis::Vertical) as usize] += 1;
        }
        for &p in &net.out_pieces[c] {
            let s = net.links[net.pieces[p].link].street;
            out[(net.streets[s].axis == Axis::Vertical) as usize] += 1;
        }
        assert_eq!(inc, [1, 1]);
        assert_eq!(out, [1, 1]);
    }
}

#[test]
fn street_directions_follow_the_rule() {
    let net = build_grid(4, 6, 150.0, 2, 0).unwrap();
    let bottom = &net.streets[0];
    assert_eq!(bottom.axis, Axis::Horizontal);
    assert!(bottom.increasing, "bottom street runs rightward");
    let left = &net.streets[4];
    assert_eq!(left.axis, Axis::Vertical);
    assert!(!left.increasing, "leftmost street runs downward");
    assert!(!net.streets[1].increasing);
    assert!(net.streets[5].increasing);
}

#[test]
fn perimeter_is_a_counterclockwise_cycle() {
    for (m, n) in [(2, 2), (4, 6), (8, 4)] {
        let net = build_grid(m, n, 150.0, 2, 1).unwrap();
        let cycle = net.perimeter_cycle();
        assert_eq!(cycle.len(), 2 * (m - 1) + 2 * (n - 1));
        for w in 0..cycle.len() {
            let a = &net.links[cycle[w]];
            let b = &net.links[cycle[(w + 1) % cycle.len()]];
            assert_eq!(a.to, b.from, "perimeter breaks at {w}");
        }
        // Signed area > 0 means counterclockwise.
        let mut area = 0.0;
        for &l in &cycle {
            let (p, q) = (&net.nodes[net.links[l].from], &net.nodes[net.links[l].to]);
            area += p.x * q.y - q.x * p.y;
        }
        assert!(area > 0.0);
    }
}

#[test]
fn accessibility_holds_for_all_even_sizes() {
    for m in (2..=16).step_by(2) {
        for n in (2..=16).step_by(2) {
            let net = build_grid(m, n, 150.0, 2, 1).unwrap();
            assert!(check_global_accessibility(&net), "{m}x{n}");
        }
    }
}

#[test]
fn reversed_perimeter_link_breaks_accessibility() {
    let mut net = build_grid(6, 6, 150.0, 2, 0).unwrap();
    let link = net.perimeter_cycle()[0];
    net.reverse_link(link);
    assert!(!check_global_accessibility(&net));
}

/// Minimum length over every simple node path, by exhaustive DFS.
fn brute_shortest(net: &GridNetwork, from: NodeId, to: NodeId) -> f64 {
    fn go(net: &GridNetwork, u: NodeId, to: NodeId, seen: &mut Vec<bool>, len: f64, best: &mut f64) {
        if len >= *best {
            return;
        }
        if u == to {
            *best = len;
            return;
        }
        for &p in &net.out_pieces[u] {
            let v = net.pieces[p].to;
            if !seen[v] {
                seen[v] = true;
                go(net, v, to, seen, len + net.pieces[p].length, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; net.nodes.len()];
    seen[from] = true;
    let mut best = f64::INFINITY;
    go(net, from, to, &mut seen, 0.0, &mut best);
    best
}

#[test]
fn dijkstra_matches_exhaustive_search_on_4x4() {
    let net = build_grid(4, 4, 150.0, 2, 1).unwrap();
    let sp = ShortestPaths::new(&net);
    let mut detoured = 0;
    for od in od_pairs(&net, OdSet::Terminals).into_iter().step_by(7) {
        let b = brute_shortest(&net, od.origin, od.destination);
        assert!((sp.distance(od.origin, od.destination) - b).abs() < 1e-9);
        let route = sp.lexicographic(&net, od).unwrap();
        let len: f64 = route.pieces.iter().map(|&p| net.pieces[p].length).sum();
        assert!((len - b).abs() < 1e-9);
        let d = sp.od_distances(&net, od);
        assert!(d.shortest >= d.manhattan - 1e-9);
    }
    let plain = build_grid(4, 4, 150.0, 2, 0).unwrap();
    let sp = ShortestPaths::new(&plain);
    for od in od_pairs(&plain, OdSet::Crossroads) {
        let d = sp.od_distances(&plain, od);
        assert!((d.shortest - brute_shortest(&plain, od.origin, od.destination)).abs() < 1e-9);
        if d.shortest > d.manhattan + 1e-9 {
            assert!(d.shortest >= d.manhattan + 2.0 * 150.0 - 1e-9, "{d:?}");
            detoured += 1;
        }
    }
    assert!(detoured > 0);
}

#[test]
fn same_street_downstream_is_straight() {
    let net = build_grid(4, 4, 150.0, 2, 1).unwrap();
    let sp = ShortestPaths::new(&net);
    let s = &net.streets[0];
    let od = OdPair { origin: s.entrance, destination: s.exit };
    let route = sp.lexicographic(&net, od).unwrap();
    assert_eq!(route.turns(&net), 0);
    assert!((route.length - net.manhattan(od.origin, od.destination)).abs() < 1e-9);
}

#[test]
fn favorable_single_turn_is_manhattan() {
    let net = build_grid(4, 4, 150.0, 2, 0).unwrap();
    let sp = ShortestPaths::new(&net);
    // Bottom street (rightward) into the rightmost vertical street (upward).
    let od = OdPair { origin: net.streets[0].entrance, destination: net.streets[4 + 3].exit };
    let route = sp.lexicographic(&net, od).unwrap();
    assert_eq!(route.turns(&net), 1);
    assert!((route.length - net.manhattan(od.origin, od.destination)).abs() < 1e-9);
}

#[test]
fn sampled_routes_are_shortest_and_cover_ties() {
    let net = build_grid(6, 6, 150.0, 2, 1).unwrap();
    let sp = ShortestPaths::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let od = OdPair { origin: net.streets[0].entrance, destination: net.streets[11].exit };
    assert!(sp.path_count(od.origin, od.destination) > 1.0);
    let mut distinct = std::collections::HashSet::new();
    for _ in 0..200 {
        let r = sp.sample(&net, od, &mut rng).unwrap();
        assert!((r.length - sp.distance(od.origin, od.destination)).abs() < 1e-9);
        distinct.insert(r.pieces.clone());
    }
    assert_eq!(distinct.len() as f64, sp.path_count(od.origin, od.destination));
}

#[test]
fn zero_budget_enumerates_exactly_the_shortest_routes() {
    let net = build_grid(6, 6, 150.0, 2, 1).unwrap();
    let sp = ShortestPaths::new(&net);
    for od in od_pairs(&net, OdSet::Terminals).into_iter().step_by(97) {
        let all = sp.within_budget(&net, od, 0.0, usize::MAX);
        assert_eq!(all.len() as f64, sp.path_count(od.origin, od.destination));
        let wider = sp.within_budget(&net, od, 600.0, usize::MAX);
        assert!(wider.len() >= all.len());
        for r in &wider {
            assert!(r.length <= sp.distance(od.origin, od.destination) + 600.0 + 1e-6);
        }
    }
}

#[test]
fn terminal_od_counts_match_published_path_counts() {
    for (size, expected) in [(2, 60), (4, 1000), (6, 5124)] {
        let net = build_grid(size, size, 150.0, 2, 1).unwrap();
        assert_eq!(od_pairs(&net, OdSet::Terminals).len(), expected);
    }
}

#[test]
fn detour_ratio_is_symmetric_and_shrinks() {
    let mut prev = f64::INFINITY;
    for k in [2, 4, 6, 8] {
        let a = build_grid(k, k + 2, 150.0, 2, 0).unwrap();
        let b = build_grid(k + 2, k, 150.0, 2, 0).unwrap();
        for set in [OdSet::Crossroads, OdSet::EntranceExit] {
            let ra = average_detour_ratio(&a, &ShortestPaths::new(&a), &od_pairs(&a, set)).unwrap();
            let rb = average_detour_ratio(&b, &ShortestPaths::new(&b), &od_pairs(&b, set)).unwrap();
            assert!((ra - rb).abs() < 1e-12, "{k} {set:?}");
        }
        let sq = build_grid(k, k, 150.0, 2, 0).unwrap();
        let r = average_detour_ratio(&sq, &ShortestPaths::new(&sq), &od_pairs(&sq, OdSet::EntranceExit)).unwrap();
        assert!(r <= prev + 1e-12);
        prev = r;
    }
}

#[test]
fn detour_ratio_edge_cases() {
    let net = build_grid(2, 2, 150.0, 2, 1).unwrap();
    let sp = ShortestPaths::new(&net);
    assert!(average_detour_ratio(&net, &sp, &[]).is_err());
    let s = &net.streets[0];
    let straight = [OdPair { origin: s.entrance, destination: s.exit }];
    assert!((average_detour_ratio(&net, &sp, &straight).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn spec_round_trip_rebuilds_identical_network() {
    let mut spec = NetworkSpec::homogeneous(4, 6, 150.0, 2, 1);
    spec.block_lengths_h = vec![150.0, 200.0, 120.0, 150.0, 150.0];
    let a = GridNetwork::from_spec(&spec).unwrap();
    let b = GridNetwork::from_spec(&a.spec).unwrap();
    assert_eq!(a, b);
}
