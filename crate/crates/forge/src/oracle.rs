//! Independent brute-force ground truth: Hamiltonian path enumeration,
//! exact (1,2)-TSP, exact Graphic TSP via smallest Eulerian spanning
//! multi-subgraph, and an independent subset-enumeration amplifier check.
//!
//! Budgets are hard refusals, never silent downgrades.

use crate::graph::{metric_closure, tour_cost_graphic, Tour, VertexId, WeightedGraph};
use crate::wheel::{AmplifierVerdict, WheelAmplifier};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {0} vertices, over the exhaustive budget of {1}")]
    RefuseExhaustive(usize, usize),
    #[error("graph is disconnected; no shortest-path metric exists")]
    NoMetric,
    #[error("node expansion cap of {0} exceeded")]
    NodeCap(u64),
    #[error("vertex {0} out of range")]
    BadVertex(VertexId),
}

/// Hard limits for the exhaustive oracles, overridable through the
/// `FORGE_BUDGET_*` environment variables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnumerationBudget {
    /// Max vertices for spanning-path enumeration.
    pub max_path_vertices: usize,
    /// Max vertices for the exact TSP solvers.
    pub max_tsp_vertices: usize,
    /// Max vertices for exhaustive subset enumeration.
    pub max_subset_vertices: usize,
    /// Safety cap on search nodes expanded.
    pub max_nodes_expanded: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_path_vertices: 25,
            max_tsp_vertices: 14,
            max_subset_vertices: 21,
            max_nodes_expanded: 200_000_000,
        }
    }
}

impl EnumerationBudget {
    /// Defaults with `FORGE_BUDGET_PATHS`, `FORGE_BUDGET_TSP`,
    /// `FORGE_BUDGET_SUBSETS` and `FORGE_BUDGET_NODES` applied on top.
    pub fn from_env() -> Self {
        let mut b = EnumerationBudget::default();
        let read = |name: &str| std::env::var(name).ok().and_then(|v| v.parse().ok());
        if let Some(v) = read("FORGE_BUDGET_PATHS") {
            b.max_path_vertices = v;
        }
        if let Some(v) = read("FORGE_BUDGET_TSP") {
            b.max_tsp_vertices = v;
        }
        if let Some(v) = read("FORGE_BUDGET_SUBSETS") {
            b.max_subset_vertices = v;
        }
        if let Some(v) = std::env::var("FORGE_BUDGET_NODES")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
        {
            b.max_nodes_expanded = v;
        }
        b
    }
}

/// All simple paths from `from` to `to` that visit every vertex exactly
/// once, as vertex sequences.
pub fn enum_spanning_paths(
    g: &WeightedGraph,
    from: VertexId,
    to: VertexId,
    budget: &EnumerationBudget,
) -> Result<Vec<Vec<VertexId>>, OracleError> {
    let n = g.vertex_count();
    if n > budget.max_path_vertices {
        return Err(OracleError::RefuseExhaustive(n, budget.max_path_vertices));
    }
    if from >= n || to >= n {
        return Err(OracleError::BadVertex(from.max(to)));
    }
    let mut out = Vec::new();
    let mut visited = vec![false; n];
    let mut path = Vec::with_capacity(n);
    let mut nodes: u64 = 0;
    visited[from] = true;
    path.push(from);
    dfs_paths(g, to, &mut visited, &mut path, &mut out, &mut nodes, budget)?;
    Ok(out)
}

fn dfs_paths(
    g: &WeightedGraph,
    to: VertexId,
    visited: &mut [bool],
    path: &mut Vec<VertexId>,
    out: &mut Vec<Vec<VertexId>>,
    nodes: &mut u64,
    budget: &EnumerationBudget,
) -> Result<(), OracleError> {
    *nodes += 1;
    if *nodes > budget.max_nodes_expanded {
        return Err(OracleError::NodeCap(budget.max_nodes_expanded));
    }
    let cur = *path.last().unwrap();
    if path.len() == visited.len() {
        if cur == to {
            out.push(path.clone());
        }
        return Ok(());
    }
    if cur == to {
        // `to` may only appear as the final vertex of a spanning path.
        return Ok(());
    }
    let nbrs: Vec<VertexId> = g.neighbors(cur).collect();
    for v in nbrs {
        if !visited[v] {
            visited[v] = true;
            path.push(v);
            dfs_paths(g, to, visited, path, out, nodes, budget)?;
            path.pop();
            visited[v] = false;
        }
    }
    Ok(())
}

/// Exact minimum (1,2)-tour by Held–Karp dynamic programming.
pub fn exact_tsp12(
    g: &WeightedGraph,
    budget: &EnumerationBudget,
) -> Result<(u64, Tour), OracleError> {
    let n = g.vertex_count();
    if n > budget.max_tsp_vertices {
        return Err(OracleError::RefuseExhaustive(n, budget.max_tsp_vertices));
    }
    if n == 0 {
        return Ok((0, Tour::new(vec![])));
    }
    if n == 1 {
        return Ok((1, Tour::new(vec![0])));
    }
    let w = |u: usize, v: usize| -> u64 {
        if g.has_edge(u, v) {
            1
        } else {
            2
        }
    };
    let full = 1usize << n;
    const INF: u64 = u64::MAX / 4;
    // dp[mask][last]: cheapest path starting at 0 covering mask, ending at last.
    let mut dp = vec![vec![INF; n]; full];
    let mut parent = vec![vec![usize::MAX; n]; full];
    dp[1][0] = 0;
    for mask in 1..full {
        if mask & 1 == 0 {
            continue;
        }
        for last in 0..n {
            if mask & (1 << last) == 0 || dp[mask][last] == INF {
                continue;
            }
            let base = dp[mask][last];
            for next in 1..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let cand = base + w(last, next);
                if cand < dp[nm][next] {
                    dp[nm][next] = cand;
                    parent[nm][next] = last;
                }
            }
        }
    }
    let mut best = INF;
    let mut best_last = 0;
    #[allow(clippy::needless_range_loop)]
    for last in 1..n {
        let cand = dp[full - 1][last] + w(last, 0);
        if cand < best {
            best = cand;
            best_last = last;
        }
    }
    // Reconstruct.
    let mut order = Vec::with_capacity(n);
    let mut mask = full - 1;
    let mut cur = best_last;
    while cur != usize::MAX {
        order.push(cur);
        let p = parent[mask][cur];
        mask &= !(1 << cur);
        cur = p;
    }
    order.reverse();
    debug_assert_eq!(order[0], 0);
    Ok((best, Tour::new(order)))
}

/// Exact Graphic TSP cost: the smallest Eulerian spanning multi-subgraph,
/// found by branch-and-bound over edge multiplicities in {0, 1, 2}. An
/// optimal solution never uses an edge three times, since removing two
/// copies preserves parity and total size only drops.
pub fn exact_graphic_tsp(
    g: &WeightedGraph,
    budget: &EnumerationBudget,
) -> Result<u64, OracleError> {
    let n = g.vertex_count();
    if n > budget.max_tsp_vertices {
        return Err(OracleError::RefuseExhaustive(n, budget.max_tsp_vertices));
    }
    if !g.is_connected() {
        return Err(OracleError::NoMetric);
    }
    if n <= 1 {
        return Ok(0);
    }
    let edges = g.edges();
    let m = edges.len();
    // The vertex is "closed" once every incident edge has a multiplicity.
    let mut last_idx = vec![0usize; n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        last_idx[u] = i;
        last_idx[v] = i;
    }
    let mut best = 2 * (n as u64 - 1); // tree doubling upper bound
    let mut deg = vec![0u32; n];
    let mut mult = vec![0u8; m];

    fn rec(
        i: usize,
        total: u64,
        edges: &[(usize, usize)],
        last_idx: &[usize],
        deg: &mut [u32],
        mult: &mut [u8],
        best: &mut u64,
    ) {
        if total >= *best {
            return;
        }
        if i == edges.len() {
            // All degrees are even and positive here (checked incrementally);
            // verify the chosen multi-subgraph is connected and spanning.
            let n = deg.len();
            let mut adj = vec![Vec::new(); n];
            for (e, &(u, v)) in edges.iter().enumerate() {
                if mult[e] > 0 {
                    adj[u].push(v);
                    adj[v].push(u);
                }
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        count += 1;
                        stack.push(v);
                    }
                }
            }
            if count == n {
                *best = total;
            }
            return;
        }
        let (u, v) = edges[i];
        for m_e in [0u8, 1, 2] {
            mult[i] = m_e;
            deg[u] += m_e as u32;
            deg[v] += m_e as u32;
            let mut ok = true;
            for x in [u, v] {
                if last_idx[x] == i && (!deg[x].is_multiple_of(2) || deg[x] == 0) {
                    ok = false;
                }
            }
            if ok {
                rec(i + 1, total + m_e as u64, edges, last_idx, deg, mult, best);
            }
            deg[u] -= m_e as u32;
            deg[v] -= m_e as u32;
            mult[i] = 0;
        }
    }
    rec(0, 0, &edges, &last_idx, &mut deg, &mut mult, &mut best);
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CrossCheckVerdict {
    Agree { cost: u64 },
    Mismatch { eulerian: u64, permutation: u64 },
}

/// Asserts the Eulerian-subgraph optimum equals the optimum over all
/// cyclic tours costed in the metric closure.
pub fn cross_check_graphic(
    g: &WeightedGraph,
    budget: &EnumerationBudget,
) -> Result<CrossCheckVerdict, OracleError> {
    let n = g.vertex_count();
    if n > budget.max_tsp_vertices {
        return Err(OracleError::RefuseExhaustive(n, budget.max_tsp_vertices));
    }
    let eulerian = exact_graphic_tsp(g, budget)?;
    metric_closure(g).map_err(|_| OracleError::NoMetric)?;
    let permutation = min_graphic_tour_by_sweep(g)?;
    if eulerian == permutation {
        Ok(CrossCheckVerdict::Agree { cost: eulerian })
    } else {
        Ok(CrossCheckVerdict::Mismatch {
            eulerian,
            permutation,
        })
    }
}

fn min_graphic_tour_by_sweep(g: &WeightedGraph) -> Result<u64, OracleError> {
    let n = g.vertex_count();
    if n <= 1 {
        return Ok(0);
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best = u64::MAX;
    permute(&mut rest, 0, &mut |perm| {
        let mut order = Vec::with_capacity(n);
        order.push(0);
        order.extend_from_slice(perm);
        if let Ok(c) = tour_cost_graphic(g, &Tour::new(order)) {
            best = best.min(c);
        }
    });
    Ok(best)
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

/// Oracle-side twin of `wheel::check_amplifier` with an independent subset
/// iteration (recursive in/out branching with incremental cut updates).
pub fn exhaustive_subsets(
    w: &WheelAmplifier,
    budget: &EnumerationBudget,
) -> Result<AmplifierVerdict, OracleError> {
    let n = w.size;
    if n > budget.max_subset_vertices {
        return Err(OracleError::RefuseExhaustive(n, budget.max_subset_vertices));
    }
    // Adjacency over 0-based ids.
    let mut adj = vec![Vec::new(); n];
    for (a, b) in w.edges() {
        adj[a - 1].push(b - 1);
        adj[b - 1].push(a - 1);
    }
    let contacts: Vec<bool> = (1..=n).map(|v| v % 7 == 0).collect();

    enum Found {
        None,
        Witness(Vec<usize>),
    }

    struct Ctx<'a> {
        adj: &'a [Vec<usize>],
        contacts: &'a [bool],
        member: Vec<i8>, // -1 undecided, 0 out, 1 in
        found: Found,
    }

    fn rec(ctx: &mut Ctx, v: usize, cut: usize, c_in: usize, c_out: usize, size_in: usize) {
        if matches!(ctx.found, Found::Witness(_)) {
            return;
        }
        let n = ctx.member.len();
        if v == n {
            if size_in == 0 || size_in == n {
                return;
            }
            if cut < c_in.min(c_out) {
                let witness = (0..n)
                    .filter(|&i| ctx.member[i] == 1)
                    .map(|i| i + 1)
                    .collect();
                ctx.found = Found::Witness(witness);
            }
            return;
        }
        for side in [1i8, 0] {
            ctx.member[v] = side;
            let mut extra_cut = 0;
            for &u in &ctx.adj[v] {
                if u < v && ctx.member[u] != side {
                    extra_cut += 1;
                }
            }
            let (ci, co) = if ctx.contacts[v] {
                if side == 1 {
                    (c_in + 1, c_out)
                } else {
                    (c_in, c_out + 1)
                }
            } else {
                (c_in, c_out)
            };
            rec(
                ctx,
                v + 1,
                cut + extra_cut,
                ci,
                co,
                size_in + side as usize,
            );
        }
        ctx.member[v] = -1;
    }

    let mut ctx = Ctx {
        adj: &adj,
        contacts: &contacts,
        member: vec![-1; n],
        found: Found::None,
    };
    rec(&mut ctx, 0, 0, 0, 0, 0);
    match ctx.found {
        Found::Witness(w) => Ok(AmplifierVerdict::Violated { witness: w }),
        Found::None => Ok(AmplifierVerdict::Holds),
    }
}
