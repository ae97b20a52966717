//! Undirected contact graph and propagation path search.
//!
//! Node indices follow the lexicographic order of object ids, so neighbour
//! iteration, enumeration order and tie-breaking are all independent of the
//! order in which contacts were inserted.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::InferredScene;
use crate::scene::{DerivedGeometry, SceneModel};

pub const DEFAULT_PATH_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("no propagation path")]
    NoPath,
    #[error("more than {0} simple paths; enumeration aborted")]
    PathLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropagationPath {
    /// Source first, touched object last.
    pub nodes: Vec<String>,
}

impl PropagationPath {
    pub fn hop_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn source(&self) -> &str {
        &self.nodes[0]
    }

    pub fn target(&self) -> &str {
        self.nodes.last().expect("paths are non-empty")
    }

    pub fn is_simple(&self) -> bool {
        let unique: BTreeSet<&String> = self.nodes.iter().collect();
        unique.len() == self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactGraph {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<BTreeSet<usize>>,
    sources: BTreeSet<usize>,
    path_limit: usize,
}

impl ContactGraph {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        let ids: Vec<String> = set.into_iter().collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        ContactGraph {
            adjacency: vec![BTreeSet::new(); ids.len()],
            ids,
            index,
            sources: BTreeSet::new(),
            path_limit: DEFAULT_PATH_LIMIT,
        }
    }

    pub fn with_path_limit(mut self, limit: usize) -> Self {
        self.path_limit = limit.max(1);
        self
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    fn idx(&self, id: &str) -> Result<usize, GraphError> {
        self.index.get(id).copied().ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, neighbours) in self.adjacency.iter().enumerate() {
            for &b in neighbours.range(a + 1..) {
                out.push((self.ids[a].clone(), self.ids[b].clone()));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&a), Some(&b)) => self.adjacency[a].contains(&b),
            _ => false,
        }
    }

    pub fn neighbours(&self, id: &str) -> Result<Vec<&str>, GraphError> {
        let i = self.idx(id)?;
        Ok(self.adjacency[i].iter().map(|&j| self.ids[j].as_str()).collect())
    }

    pub fn sources(&self) -> Vec<&str> {
        self.sources.iter().map(|&i| self.ids[i].as_str()).collect()
    }

    pub fn is_source(&self, id: &str) -> bool {
        self.index.get(id).is_some_and(|i| self.sources.contains(i))
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        self.set_edge(a, b, true)
    }

    fn set_edge(&mut self, a: &str, b: &str, connected: bool) -> Result<(), GraphError> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        if ia == ib {
            return Err(GraphError::SelfLoop(a.to_string()));
        }
        if connected {
            self.adjacency[ia].insert(ib);
            self.adjacency[ib].insert(ia);
        } else {
            self.adjacency[ia].remove(&ib);
            self.adjacency[ib].remove(&ia);
        }
        Ok(())
    }

    pub fn set_source(&mut self, id: &str, is_source: bool) -> Result<(), GraphError> {
        let i = self.idx(id)?;
        if is_source {
            self.sources.insert(i);
        } else {
            self.sources.remove(&i);
        }
        Ok(())
    }

    /// Returns a copy with the contact between `a` and `b` set or cleared.
    pub fn update_contact(&self, a: &str, b: &str, connected: bool) -> Result<ContactGraph, GraphError> {
        let mut next = self.clone();
        next.set_edge(a, b, connected)?;
        Ok(next)
    }

    /// Every simple path from every source to `touched`, found depth-first.
    /// A touched source contributes the single-node path.
    pub fn all_paths(&self, touched: &str) -> Result<Vec<PropagationPath>, GraphError> {
        let target = self.idx(touched)?;
        let mut found: Vec<Vec<usize>> = Vec::new();
        for &source in &self.sources {
            let mut visited = vec![false; self.ids.len()];
            let mut stack = vec![source];
            visited[source] = true;
            self.dfs(source, target, &mut visited, &mut stack, &mut found)?;
        }
        Ok(found.into_iter().map(|p| self.to_path(&p)).collect())
    }

    fn dfs(
        &self,
        node: usize,
        target: usize,
        visited: &mut [bool],
        stack: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) -> Result<(), GraphError> {
        if node == target {
            if found.len() >= self.path_limit {
                return Err(GraphError::PathLimit(self.path_limit));
            }
            found.push(stack.clone());
            return Ok(());
        }
        for &next in &self.adjacency[node] {
            if !visited[next] {
                visited[next] = true;
                stack.push(next);
                self.dfs(next, target, visited, stack, found)?;
                stack.pop();
                visited[next] = false;
            }
        }
        Ok(())
    }

    fn to_path(&self, indices: &[usize]) -> PropagationPath {
        PropagationPath { nodes: indices.iter().map(|&i| self.ids[i].clone()).collect() }
    }

    /// Lexicographically smallest shortest path from `source` to `target`
    /// by breadth-first search; same result as enumerating and taking the minimum.
    pub fn bfs_shortest_path(&self, source: &str, target: &str) -> Result<Option<PropagationPath>, GraphError> {
        let (s, t) = (self.idx(source)?, self.idx(target)?);
        let mut dist = vec![usize::MAX; self.ids.len()];
        dist[t] = 0;
        let mut queue = VecDeque::from([t]);
        while let Some(n) = queue.pop_front() {
            for &m in &self.adjacency[n] {
                if dist[m] == usize::MAX {
                    dist[m] = dist[n] + 1;
                    queue.push_back(m);
                }
            }
        }
        if dist[s] == usize::MAX {
            return Ok(None);
        }
        let mut path = vec![s];
        let mut current = s;
        while current != t {
            current = *self.adjacency[current]
                .iter()
                .find(|&&m| dist[m] + 1 == dist[current])
                .expect("a neighbour one step closer exists");
            path.push(current);
        }
        Ok(Some(self.to_path(&path)))
    }

    /// Shortest path from each reachable source to `touched`, with the same
    /// tie-break as [`shortest_path`] over [`ContactGraph::all_paths`].
    pub fn shortest_paths_to(&self, touched: &str) -> Result<Vec<PropagationPath>, GraphError> {
        self.idx(touched)?;
        let mut out = Vec::new();
        for source in self.sources() {
            if let Some(p) = self.bfs_shortest_path(source, touched)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Ids connected to `id`, including itself.
    pub fn component_of(&self, id: &str) -> Result<BTreeSet<String>, GraphError> {
        let start = self.idx(id)?;
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &self.adjacency[n] {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        Ok(seen.into_iter().map(|i| self.ids[i].clone()).collect())
    }

    /// Graphviz rendering; sources are drawn filled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph contacts {\n");
        for (i, id) in self.ids.iter().enumerate() {
            if self.sources.contains(&i) {
                let _ = writeln!(out, "  \"{id}\" [style=filled, fillcolor=orange];");
            } else {
                let _ = writeln!(out, "  \"{id}\";");
            }
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  \"{a}\" -- \"{b}\";");
        }
        out.push_str("}\n");
        out
    }
}

/// Picks the minimum-hop path, per source when `per_source` is set. Ties go
/// to the lexicographically smallest id sequence.
pub fn shortest_path(paths: &[PropagationPath], per_source: bool) -> Result<Vec<PropagationPath>, GraphError> {
    let key = |p: &&PropagationPath| (p.hop_count(), p.nodes.clone());
    if paths.is_empty() {
        return Err(GraphError::NoPath);
    }
    if !per_source {
        return Ok(vec![paths.iter().min_by_key(key).cloned().expect("non-empty")]);
    }
    let mut best: BTreeMap<&str, &PropagationPath> = BTreeMap::new();
    for path in paths {
        best.entry(path.source())
            .and_modify(|current| {
                if key(&path) < key(current) {
                    *current = path;
                }
            })
            .or_insert(path);
    }
    Ok(best.into_values().cloned().collect())
}

/// Nodes are all objects, edges the derived contacts; sources are vibrating
/// objects adjusted by per-object `source_override`.
pub fn build_graph(scene: &SceneModel, derived: &DerivedGeometry, inferred: &InferredScene) -> ContactGraph {
    let mut graph = ContactGraph::new(scene.objects.iter().map(|o| o.id.clone()));
    for pair in &derived.contacts {
        graph.add_edge(&pair.0, &pair.1).expect("derived contacts reference scene objects");
    }
    for obj in &scene.objects {
        let vibrates = inferred.object(&obj.id).is_some_and(|o| o.analysis.should_vibrate);
        if obj.source_override.unwrap_or(vibrates) {
            graph.set_source(&obj.id, true).expect("scene object");
        }
    }
    graph
}
