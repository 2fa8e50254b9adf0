//! Property tests for the invariants of each module, checked against
//! independent oracles written here.

use std::collections::BTreeSet;

use dpath::digraph::{EmbeddedDigraph, VertexLabel};
use dpath::edp::{
    check_edp_solution, check_vdp_solution, edp_to_vdp_dag, solve_edp_dag, solve_edp_dag_with,
    solve_vdp_dag, Network, Strategy as Search, DEFAULT_EDP_BUDGET,
};
use dpath::gridtiling::{
    cells, check_gt_solution, generate_planted, generate_random, solve_gt_brute_force,
    GTAssignment, GridTilingInstance, DEFAULT_GT_BUDGET,
};
use dpath::mappers::{check_level_confinement, paths_to_gt_solution};
use dpath::reduction::{predicted_counts, reduce, reduce_degree, ReductionOutput};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn naive_tiling(inst: &GridTilingInstance) -> bool {
    let order: Vec<_> = cells(inst.k).collect();
    fn go(
        inst: &GridTilingInstance,
        order: &[(u32, u32)],
        at: usize,
        chosen: &mut Vec<(u32, u32)>,
    ) -> bool {
        if at == order.len() {
            let asg = GTAssignment::from_fn(inst.k, |x, y| {
                chosen[order.iter().position(|&c| c == (x, y)).unwrap()]
            });
            return check_gt_solution(inst, &asg);
        }
        let (x, y) = order[at];
        inst.set(x, y).iter().any(|&p| {
            chosen.push(p);
            let ok = go(inst, order, at + 1, chosen);
            chosen.pop();
            ok
        })
    }
    go(inst, &order, 0, &mut Vec::new())
}

fn instance() -> impl Strategy<Value = GridTilingInstance> {
    (1u32..=2, 2u32..=3, 0.0f64..=1.0, any::<u64>())
        .prop_map(|(k, n, d, s)| generate_random(k, n, d, s).unwrap())
}

fn large_instance() -> impl Strategy<Value = GridTilingInstance> {
    (1u32..=4, 2u32..=6, 0.0f64..=1.0, any::<u64>())
        .prop_map(|(k, n, d, s)| generate_random(k, n, d, s).unwrap())
}

/// Vertex count, edges, and terminal pairs.
type DagCase = (usize, Vec<(usize, usize)>, Vec<(usize, usize)>);

fn random_dag() -> impl Strategy<Value = DagCase> {
    (3usize..=12)
        .prop_flat_map(|n| {
            let all: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            let m = all.len();
            (
                Just(n),
                proptest::sample::subsequence(all, 0..=m),
                proptest::collection::vec((0..n, 0..n), 1..=2),
            )
        })
        .prop_map(|(n, edges, raw)| {
            let pairs = raw.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
            (n, edges, pairs)
        })
}

fn paths_between(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<BTreeSet<(usize, usize)>> {
    fn go(
        adj: &[Vec<usize>],
        v: usize,
        t: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<BTreeSet<(usize, usize)>>,
    ) {
        if v == t {
            out.push(cur.iter().copied().collect());
            return;
        }
        for &w in &adj[v] {
            cur.push((v, w));
            go(adj, w, t, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(adj, s, t, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over tuples of paths, one per pair.
fn enumerate_edp(n: usize, edges: &[(usize, usize)], pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
    }
    let options: Vec<_> = pairs
        .iter()
        .map(|&(s, t)| paths_between(&adj, s, t))
        .collect();
    fn pick(options: &[Vec<BTreeSet<(usize, usize)>>], used: &BTreeSet<(usize, usize)>) -> bool {
        let Some((first, rest)) = options.split_first() else {
            return true;
        };
        first
            .iter()
            .any(|p| p.is_disjoint(used) && pick(rest, &used.union(p).copied().collect()))
    }
    pick(&options, &BTreeSet::new())
}

fn solve_reduction(out: &ReductionOutput) -> Option<dpath::edp::PathSet> {
    let pairs = out.terminal_indices().unwrap();
    solve_edp_dag(&Network::from(&out.graph), &pairs, DEFAULT_EDP_BUDGET).unwrap()
}

/// Angle of `to − from` in `[0, 2π)`.
fn angle(g: &EmbeddedDigraph, from: usize, to: usize) -> f64 {
    let (a, b) = (g.coord(from), g.coord(to));
    let dx = (b.x - a.x).to_f64().unwrap();
    let dy = (b.y - a.y).to_f64().unwrap();
    let t = dy.atan2(dx);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tiling_solver_matches_naive_enumeration(inst in instance()) {
        let found = solve_gt_brute_force(&inst, DEFAULT_GT_BUDGET).unwrap();
        if let Some(asg) = &found {
            prop_assert!(check_gt_solution(&inst, asg));
        }
        prop_assert_eq!(found.is_some(), naive_tiling(&inst));
    }

    #[test]
    fn planted_instances_are_feasible(k in 1u32..=3, n in 2u32..=4, noise in 0u32..4, seed in any::<u64>()) {
        let inst = generate_planted(k, n, noise, seed).unwrap();
        prop_assert!(solve_gt_brute_force(&inst, DEFAULT_GT_BUDGET).unwrap().is_some());
    }

    #[test]
    fn generators_are_deterministic(k in 1u32..=3, n in 2u32..=4, d in 0.0f64..=1.0, seed in any::<u64>()) {
        prop_assert_eq!(generate_random(k, n, d, seed).unwrap(), generate_random(k, n, d, seed).unwrap());
        prop_assert_eq!(generate_planted(k, n, 2, seed).unwrap(), generate_planted(k, n, 2, seed).unwrap());
    }

    #[test]
    fn reductions_are_planar_dags_with_exact_counts(inst in large_instance()) {
        let out = reduce(&inst).unwrap();
        prop_assert!(out.graph.topological_sort().is_dag());
        prop_assert_eq!(out.graph.check_planar_embedding().unwrap().genus, 0);
        prop_assert_eq!(out.terminals.len(), 2 * inst.k as usize);
        prop_assert_eq!(predicted_counts(&inst, false), out.actual_counts());
        let red = reduce_degree(&out).unwrap();
        prop_assert_eq!(predicted_counts(&inst, true), red.actual_counts());
        prop_assert!(red.graph.max_in_degree() <= 2 && red.graph.max_out_degree() <= 2);
        prop_assert_eq!(red.graph.check_planar_embedding().unwrap().genus, 0);
        prop_assert!(red.graph.topological_sort().is_dag());
    }

    #[test]
    fn non_terminals_have_degree_at_most_two(inst in large_instance()) {
        let out = reduce(&inst).unwrap();
        let g = &out.graph;
        for v in 0..g.vertex_count() {
            if !matches!(g.label(v), VertexLabel::Terminal { .. }) {
                prop_assert!(g.in_degree(v) <= 2 && g.out_degree(v) <= 2, "{}", g.label(v));
            }
        }
    }

    #[test]
    fn neighbourhoods_exclude_the_set(inst in instance(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..20)) {
        let g = reduce(&inst).unwrap().graph;
        let set: BTreeSet<usize> = picks.iter().map(|i| i.index(g.vertex_count())).collect();
        prop_assert!(g.out_neighbors(&set).is_disjoint(&set));
        prop_assert!(g.in_neighbors(&set).is_disjoint(&set));
    }

    #[test]
    fn rotation_is_angular_order(inst in instance(), deg2: bool) {
        let mut out = reduce(&inst).unwrap();
        if deg2 {
            out = reduce_degree(&out).unwrap();
        }
        let g = &out.graph;
        for v in 0..g.vertex_count() {
            let other = |e: usize| { let (a, b) = g.edges()[e]; if a == v { b } else { a } };
            let mut want: Vec<usize> = g.rotation(v).to_vec();
            want.sort_by(|&e, &f| angle(g, v, other(e)).total_cmp(&angle(g, v, other(f))).then(e.cmp(&f)));
            prop_assert_eq!(g.rotation(v), &want[..]);
        }
        let rebuilt = g.to_builder().finish().unwrap();
        let reparsed = EmbeddedDigraph::from_json(&g.to_json()).unwrap();
        for v in 0..g.vertex_count() {
            prop_assert_eq!(rebuilt.rotation(v), g.rotation(v));
            prop_assert_eq!(reparsed.rotation(v), g.rotation(v));
        }
    }

    #[test]
    fn degree_reduction_keeps_the_answer(inst in instance()) {
        let out = reduce(&inst).unwrap();
        let red = reduce_degree(&out).unwrap();
        prop_assert_eq!(solve_reduction(&out).is_some(), solve_reduction(&red).is_some());
    }

    #[test]
    fn extraction_from_solver_paths_is_valid(inst in instance(), deg2: bool) {
        let mut out = reduce(&inst).unwrap();
        if deg2 {
            out = reduce_degree(&out).unwrap();
        }
        if let Some(ps) = solve_reduction(&out) {
            prop_assert!(check_level_confinement(&out, &ps));
            let asg = paths_to_gt_solution(&out, &ps).unwrap();
            prop_assert!(check_gt_solution(&inst, &asg));
            // Both whole vertices of neighbouring cells lie on the same
            // row path, so second coordinates cannot decrease along it.
            for (x, y) in cells(inst.k).filter(|&(x, _)| x < inst.k) {
                prop_assert!(asg.get(x, y).1 <= asg.get(x + 1, y).1);
            }
            for (x, y) in cells(inst.k).filter(|&(_, y)| y < inst.k) {
                prop_assert!(asg.get(x, y).0 <= asg.get(x, y + 1).0);
            }
        }
    }

    #[test]
    fn solver_matches_path_tuple_enumeration((n, edges, pairs) in random_dag()) {
        let net = Network::new(n, &edges).unwrap();
        let truth = enumerate_edp(n, &edges, &pairs);
        for strategy in [Search::Pebble, Search::Sequential] {
            let found = solve_edp_dag_with(&net, &pairs, DEFAULT_EDP_BUDGET, strategy).unwrap();
            prop_assert_eq!(found.is_some(), truth);
            if let Some(ps) = found {
                prop_assert!(check_edp_solution(&net, &pairs, &ps));
            }
        }
    }

    #[test]
    fn line_graph_transform_is_equivalent((n, edges, pairs) in random_dag()) {
        let net = Network::new(n, &edges).unwrap();
        let direct = solve_edp_dag(&net, &pairs, DEFAULT_EDP_BUDGET).unwrap();
        let lg = edp_to_vdp_dag(&net, &pairs).unwrap();
        let via = solve_vdp_dag(&lg.net, &lg.pairs, DEFAULT_EDP_BUDGET).unwrap();
        prop_assert_eq!(direct.is_some(), via.is_some());
        if let Some(ps) = via {
            prop_assert!(check_vdp_solution(&lg.net, &lg.pairs, &ps));
            prop_assert!(check_edp_solution(&net, &pairs, &lg.project(&ps)));
        }
        if let Some(ps) = direct {
            let lifted = lg.lift(&net, &ps).unwrap();
            prop_assert!(check_vdp_solution(&lg.net, &lg.pairs, &lifted));
        }
    }

    #[test]
    fn solver_is_deterministic((n, edges, pairs) in random_dag()) {
        let net = Network::new(n, &edges).unwrap();
        for strategy in [Search::Pebble, Search::Sequential] {
            prop_assert_eq!(
                solve_edp_dag_with(&net, &pairs, DEFAULT_EDP_BUDGET, strategy).unwrap(),
                solve_edp_dag_with(&net, &pairs, DEFAULT_EDP_BUDGET, strategy).unwrap()
            );
        }
    }
}
