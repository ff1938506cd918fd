//! Compressed adjacency and label-setting shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub const NONE: usize = usize::MAX;

/// Undirected weighted graph in compressed sparse row form.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edge_of: Vec<usize>,
    edge_len: Vec<f64>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut deg = vec![0usize; n];
        for &(u, v, _) in edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        let mut edge_of = vec![0usize; offsets[n]];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            targets[fill[u]] = v;
            edge_of[fill[u]] = e;
            fill[u] += 1;
            targets[fill[v]] = u;
            edge_of[fill[v]] = e;
            fill[v] += 1;
        }
        // Sort each row by target so iteration order never depends on edge order.
        for v in 0..n {
            let (a, b) = (offsets[v], offsets[v + 1]);
            let mut row: Vec<(usize, usize)> = (a..b).map(|k| (targets[k], edge_of[k])).collect();
            row.sort_unstable();
            for (k, (t, e)) in (a..b).zip(row) {
                targets[k] = t;
                edge_of[k] = e;
            }
        }
        Graph { offsets, targets, edge_of, edge_len: edges.iter().map(|e| e.2).collect() }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edge_len.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_len
    }

    /// Neighbours of `v` as `(target, edge id, length)`, sorted by target.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (self.offsets[v]..self.offsets[v + 1])
            .map(move |k| (self.targets[k], self.edge_of[k], self.edge_len[self.edge_of[k]]))
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<(usize, f64)> {
        let row = &self.targets[self.offsets[u]..self.offsets[u + 1]];
        row.binary_search(&v).ok().map(|k| {
            let e = self.edge_of[self.offsets[u] + k];
            (e, self.edge_len[e])
        })
    }

    /// Connected components of the subgraph induced by vertices with `keep[v]`.
    /// Returns a component label per vertex (`NONE` for removed ones) and component sizes.
    pub fn components(&self, keep: &[bool]) -> (Vec<usize>, Vec<usize>) {
        let n = self.vertex_count();
        let mut label = vec![NONE; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if !keep[s] || label[s] != NONE {
                continue;
            }
            let c = sizes.len();
            let mut size = 0;
            label[s] = c;
            stack.push(s);
            while let Some(u) = stack.pop() {
                size += 1;
                for (w, _, _) in self.neighbors(u) {
                    if keep[w] && label[w] == NONE {
                        label[w] = c;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        (label, sizes)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MinKey {
    pub key: f64,
    pub tie: f64,
    pub vertex: usize,
}

impl PartialEq for MinKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MinKey {}

impl PartialOrd for MinKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MinKey {
    // Reversed so that `BinaryHeap` pops the smallest (key, tie, vertex).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.tie.total_cmp(&self.tie))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Result of a single- or multi-source shortest path run.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<usize>,
}

impl ShortestPaths {
    /// Vertex path from the source tree root to `target`, or `None` if unreached.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut v = target;
        while self.pred[v] != NONE {
            v = self.pred[v];
            path.push(v);
        }
        path.reverse();
        Some(path)
    }
}

/// Multi-source Dijkstra. Sources carry initial offsets; `weights` is indexed by edge id;
/// vertices with `allowed[v] == false` are never entered; labels beyond `cutoff` are dropped.
pub fn dijkstra(
    g: &Graph,
    sources: &[(usize, f64)],
    weights: &[f64],
    allowed: Option<&[bool]>,
    cutoff: f64,
) -> ShortestPaths {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(s, off) in sources {
        if allowed.is_some_and(|a| !a[s]) || off > cutoff {
            continue;
        }
        if off < dist[s] {
            dist[s] = off;
            heap.push(MinKey { key: off, tie: 0.0, vertex: s });
        }
    }
    while let Some(MinKey { key, vertex: u, .. }) = heap.pop() {
        if done[u] || key > dist[u] {
            continue;
        }
        done[u] = true;
        for (w, e, _) in g.neighbors(u) {
            if done[w] || allowed.is_some_and(|a| !a[w]) {
                continue;
            }
            let nd = key + weights[e];
            if nd < dist[w] && nd <= cutoff {
                dist[w] = nd;
                pred[w] = u;
                heap.push(MinKey { key: nd, tie: 0.0, vertex: w });
            }
        }
    }
    ShortestPaths { dist, pred }
}

/// Shortest paths with the graph's own edge lengths.
pub fn geodesic(g: &Graph, sources: &[(usize, f64)]) -> ShortestPaths {
    dijkstra(g, sources, g.edge_lengths(), None, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0 + i as f64)).collect();
        Graph::from_edges(n, &edges)
    }

    #[test]
    fn path_distances_accumulate() {
        let g = path_graph(4);
        let sp = geodesic(&g, &[(0, 0.0)]);
        assert_eq!(sp.dist, vec![0.0, 1.0, 3.0, 6.0]);
        assert_eq!(sp.path_to(3).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn removed_vertex_splits_components() {
        let g = path_graph(5);
        let keep = vec![true, true, false, true, true];
        let (_, sizes) = g.components(&keep);
        assert_eq!(sizes, vec![2, 2]);
    }

    #[test]
    fn edge_lookup_is_symmetric() {
        let g = path_graph(3);
        assert_eq!(g.edge_between(2, 1), Some((1, 2.0)));
        assert_eq!(g.edge_between(1, 2), Some((1, 2.0)));
        assert_eq!(g.edge_between(0, 2), None);
    }
}
