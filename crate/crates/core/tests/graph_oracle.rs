use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vibroscene_core::graph::{shortest_path, ContactGraph, GraphError, PropagationPath};
use vibroscene_oracles::paths::{all_simple_paths, shortest_by_label};

struct Case {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    sources: Vec<usize>,
}

impl Case {
    fn random(rng: &mut ChaCha8Rng) -> Case {
        let n = rng.gen_range(1..=8);
        // Labels are shuffled so index order and label order disagree.
        let mut labels: Vec<String> = (0..n).map(|i| format!("n{}", (i * 5 + 3) % 11)).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.gen_range(0..=i));
        }
        let density = rng.gen_range(0.15..0.8);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    edges.push((a, b));
                }
            }
        }
        let sources = (0..n).filter(|_| rng.gen_bool(0.35)).collect();
        Case { labels, edges, sources }
    }

    fn graph(&self) -> ContactGraph {
        let mut g = ContactGraph::new(self.labels.iter().cloned());
        for &(a, b) in &self.edges {
            g.add_edge(&self.labels[a], &self.labels[b]).unwrap();
        }
        for &s in &self.sources {
            g.set_source(&self.labels[s], true).unwrap();
        }
        g
    }

    fn oracle(&self, target: usize) -> BTreeSet<Vec<usize>> {
        all_simple_paths(self.labels.len(), &self.edges, &self.sources, target)
    }

    fn named(&self, path: &[usize]) -> Vec<String> {
        path.iter().map(|&i| self.labels[i].clone()).collect()
    }
}

#[test]
fn path_search_matches_brute_force_on_random_graphs() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked_paths = 0usize;
    for _ in 0..200 {
        let case = Case::random(&mut rng);
        let graph = case.graph();
        for target in 0..case.labels.len() {
            let expected = case.oracle(target);
            let found = graph.all_paths(&case.labels[target]).unwrap();
            assert!(found.iter().all(|p| p.is_simple() && graph.is_source(p.source())));
            let found_set: BTreeSet<Vec<String>> = found.iter().map(|p| p.nodes.clone()).collect();
            assert_eq!(found.len(), found_set.len(), "duplicate paths");
            let expected_set: BTreeSet<Vec<String>> = expected.iter().map(|p| case.named(p)).collect();
            assert_eq!(found_set, expected_set);
            checked_paths += found.len();

            if expected.is_empty() {
                assert_eq!(shortest_path(&found, false), Err(GraphError::NoPath));
                assert!(graph.shortest_paths_to(&case.labels[target]).unwrap().is_empty());
                continue;
            }
            let overall = shortest_by_label(expected.iter(), &case.labels).unwrap();
            assert_eq!(shortest_path(&found, false).unwrap(), vec![PropagationPath { nodes: case.named(&overall) }]);

            let mut per_source = Vec::new();
            for &s in &case.sources {
                if let Some(best) = shortest_by_label(expected.iter().filter(|p| p[0] == s), &case.labels) {
                    per_source.push(case.named(&best));
                }
            }
            per_source.sort();
            let mut got: Vec<Vec<String>> =
                shortest_path(&found, true).unwrap().into_iter().map(|p| p.nodes).collect();
            got.sort();
            assert_eq!(got, per_source);
            let mut via_graph: Vec<Vec<String>> =
                graph.shortest_paths_to(&case.labels[target]).unwrap().into_iter().map(|p| p.nodes).collect();
            via_graph.sort();
            assert_eq!(via_graph, per_source);
        }
    }
    assert!(checked_paths > 1000, "random graphs too sparse: {checked_paths} paths");
    assert!(started.elapsed().as_secs_f64() < 5.0, "took {:?}", started.elapsed());
}

#[test]
fn breadth_first_fallback_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let case = Case::random(&mut rng);
        let limited = case.graph().with_path_limit(1);
        for target in 0..case.labels.len() {
            let mut expected = Vec::new();
            for &s in &case.sources {
                let paths = case.oracle(target);
                if let Some(best) = shortest_by_label(paths.iter().filter(|p| p[0] == s), &case.labels) {
                    expected.push(case.named(&best));
                }
            }
            expected.sort();
            let mut got: Vec<Vec<String>> =
                limited.shortest_paths_to(&case.labels[target]).unwrap().into_iter().map(|p| p.nodes).collect();
            got.sort();
            assert_eq!(got, expected);
        }
    }
}

#[test]
fn removing_an_edge_never_adds_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let case = Case::random(&mut rng);
        if case.edges.is_empty() {
            continue;
        }
        let graph = case.graph();
        let (a, b) = case.edges[rng.gen_range(0..case.edges.len())];
        let cut = graph.update_contact(&case.labels[a], &case.labels[b], false).unwrap();
        assert!(!cut.has_edge(&case.labels[a], &case.labels[b]));
        assert!(graph.has_edge(&case.labels[a], &case.labels[b]), "update must not mutate the original");
        for label in &case.labels {
            let before: BTreeSet<_> = graph.all_paths(label).unwrap().into_iter().collect();
            let after: BTreeSet<_> = cut.all_paths(label).unwrap().into_iter().collect();
            assert!(after.is_subset(&before));
        }
    }
}

#[test]
fn tie_break_prefers_smallest_id_sequence() {
    let mut g = ContactGraph::new(["src", "b", "a", "touched"]);
    for (x, y) in [("src", "a"), ("src", "b"), ("a", "touched"), ("b", "touched")] {
        g.add_edge(x, y).unwrap();
    }
    g.set_source("src", true).unwrap();
    let best = g.shortest_paths_to("touched").unwrap();
    assert_eq!(best[0].nodes, ["src", "a", "touched"]);
}

#[test]
fn graph_invariants_are_enforced() {
    let mut g = ContactGraph::new(["a", "b"]);
    assert_eq!(g.add_edge("a", "a"), Err(GraphError::SelfLoop("a".into())));
    assert_eq!(g.add_edge("a", "z"), Err(GraphError::UnknownNode("z".into())));
    assert_eq!(g.set_source("z", true), Err(GraphError::UnknownNode("z".into())));
    assert!(matches!(g.all_paths("z"), Err(GraphError::UnknownNode(_))));
    g.set_source("a", true).unwrap();
    assert_eq!(g.all_paths("a").unwrap(), vec![PropagationPath { nodes: vec!["a".into()] }]);
    assert!(g.all_paths("b").unwrap().is_empty());
}

#[test]
fn path_limit_is_reported() {
    let ids: Vec<String> = (0..8).map(|i| format!("k{i}")).collect();
    let mut g = ContactGraph::new(ids.iter().cloned()).with_path_limit(10);
    for a in 0..8 {
        for b in a + 1..8 {
            g.add_edge(&ids[a], &ids[b]).unwrap();
        }
    }
    g.set_source("k0", true).unwrap();
    assert_eq!(g.all_paths("k7"), Err(GraphError::PathLimit(10)));
    assert_eq!(g.shortest_paths_to("k7").unwrap()[0].nodes, ["k0", "k7"]);
}
