//! Property tests for the structural invariants: metric triangle
//! inequality, (1,2) cost accounting, oracle agreement on random graphs,
//! and consistency-transformation monotonicity.

use forge::graph::{metric_closure, tour_cost_12, Tour, WeightedGraph};
use forge::hybrid::{is_consistent, make_consistent, reduce_to_hybrid};
use forge::linsys::{count_unsatisfied, Assignment, Equation, LinSystem};
use forge::oracle::{enum_spanning_paths, exact_tsp12, EnumerationBudget};
use proptest::prelude::*;

/// Random connected graph on 2..=n vertices: a random spanning tree plus
/// random extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let tree = proptest::collection::vec(any::<u64>(), n - 1);
        let extras = proptest::collection::vec(any::<u64>(), 0..2 * n);
        (tree, extras).prop_map(move |(tree, extras)| {
            let mut g = WeightedGraph::new(n);
            for (i, r) in tree.iter().enumerate() {
                let v = i + 1;
                let u = (*r % (v as u64)) as usize;
                g.add_edge(u, v).unwrap();
            }
            for r in extras {
                let u = (r % n as u64) as usize;
                let v = ((r >> 16) % n as u64) as usize;
                if u != v && !g.has_edge(u, v) {
                    g.add_edge(u, v).unwrap();
                }
            }
            g
        })
    })
}

fn random_tour(n: usize, seed: u64) -> Tour {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = forge::rng::SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        order.swap(i, j);
    }
    Tour::new(order)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_closure_triangle_inequality(g in connected_graph(12)) {
        let d = metric_closure(&g).unwrap();
        let n = g.vertex_count();
        for u in 0..n {
            prop_assert_eq!(d[u][u], 0);
            for v in 0..n {
                prop_assert_eq!(d[u][v], d[v][u]);
                for w in 0..n {
                    prop_assert!(d[u][w] <= d[u][v] + d[v][w]);
                }
            }
        }
    }

    #[test]
    fn tour_cost_12_accounting(g in connected_graph(10), seed in any::<u64>()) {
        let n = g.vertex_count();
        let t = random_tour(n, seed);
        let (cost, endpoints) = tour_cost_12(&g, &t).unwrap();
        // Endpoints are even and count twice the weight-2 hops.
        prop_assert_eq!(endpoints % 2, 0);
        prop_assert_eq!(cost - n as u64, endpoints / 2);
        prop_assert!(cost >= n as u64);
        // Cost n iff the tour is a Hamiltonian cycle of g.
        let ham = t.pairs().all(|(u, v)| g.has_edge(u, v));
        prop_assert_eq!(cost == n as u64, ham);
    }

    #[test]
    fn tour_cost_graphic_lower_bound(g in connected_graph(9), seed in any::<u64>()) {
        use forge::graph::tour_cost_graphic;
        let n = g.vertex_count();
        let t = random_tour(n, seed);
        let cost = tour_cost_graphic(&g, &t).unwrap();
        prop_assert!(cost >= n as u64);
        let ham = t.pairs().all(|(u, v)| g.has_edge(u, v));
        prop_assert_eq!(cost == n as u64, ham);
    }

    #[test]
    fn spanning_paths_are_reverses(g in connected_graph(7)) {
        let n = g.vertex_count();
        let budget = EnumerationBudget::default();
        let a = 0;
        let b = n - 1;
        let fwd = enum_spanning_paths(&g, a, b, &budget).unwrap();
        let bwd = enum_spanning_paths(&g, b, a, &budget).unwrap();
        let mut rev: Vec<Vec<usize>> = bwd.into_iter().map(|mut p| { p.reverse(); p }).collect();
        rev.sort();
        let mut fwd = fwd;
        fwd.sort();
        prop_assert_eq!(fwd, rev);
    }

    #[test]
    fn exact_tsp12_is_factorial_optimum(g in connected_graph(7)) {
        let budget = EnumerationBudget::default();
        let n = g.vertex_count();
        let (cost, tour) = exact_tsp12(&g, &budget).unwrap();
        prop_assert_eq!(tour_cost_12(&g, &tour).unwrap().0, cost);
        // Factorial sweep with vertex 0 pinned.
        let mut best = u64::MAX;
        let mut rest: Vec<usize> = (1..n).collect();
        permute(&mut rest, 0, &mut |perm| {
            let mut order = vec![0];
            order.extend_from_slice(perm);
            let c = tour_cost_12(&g, &Tour::new(order)).unwrap().0;
            best = best.min(c);
        });
        prop_assert_eq!(cost, best);
    }

    #[test]
    fn make_consistent_monotone(seed in any::<u64>(), bits in proptest::collection::vec(any::<bool>(), 42)) {
        let mut e3 = LinSystem::new(3);
        e3.equations.push(Equation::three([0, 1, 2], [false; 3], false));
        e3.equations.push(Equation::three([0, 1, 2], [false; 3], true));
        let (hybrid, _, map) = reduce_to_hybrid(&e3, false, 1, seed).unwrap();
        let a = Assignment::from_bits(bits);
        let before = hybrid.equations.len() - count_unsatisfied(&hybrid, &a).unwrap();
        let fixed = make_consistent(&map, &a);
        let after = hybrid.equations.len() - count_unsatisfied(&hybrid, &fixed).unwrap();
        prop_assert!(after >= before);
        prop_assert!(is_consistent(&map, &fixed));
    }
}

fn permute(items: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}
