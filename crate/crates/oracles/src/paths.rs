//! Simple paths by exhaustive permutation of node subsets.

use std::collections::BTreeSet;

/// Every simple path from any of `sources` to `target` in an undirected graph
/// on nodes `0..n`. Each path is listed source first.
pub fn all_simple_paths(n: usize, edges: &[(usize, usize)], sources: &[usize], target: usize) -> BTreeSet<Vec<usize>> {
    let mut adjacent = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adjacent[a][b] = true;
        adjacent[b][a] = true;
    }
    let mut out = BTreeSet::new();
    for &s in sources {
        if s == target {
            out.insert(vec![s]);
            continue;
        }
        let inner: Vec<usize> = (0..n).filter(|&v| v != s && v != target).collect();
        for mask in 0u32..(1 << inner.len()) {
            let mut middle: Vec<usize> = inner
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &v)| v)
                .collect();
            loop {
                let mut candidate = Vec::with_capacity(middle.len() + 2);
                candidate.push(s);
                candidate.extend_from_slice(&middle);
                candidate.push(target);
                if candidate.windows(2).all(|w| adjacent[w[0]][w[1]]) {
                    out.insert(candidate);
                }
                if !next_permutation(&mut middle) {
                    break;
                }
            }
        }
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Minimum by hop count, then lexicographic order of the given labels.
pub fn shortest_by_label<'a>(paths: impl Iterator<Item = &'a Vec<usize>>, labels: &[String]) -> Option<Vec<usize>> {
    paths
        .min_by_key(|p| (p.len(), p.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>()))
        .cloned()
}
