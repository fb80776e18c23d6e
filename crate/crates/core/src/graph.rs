//! Compact undirected graphs and the searches used throughout.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Undirected graph in compressed adjacency form. Neighbor lists are sorted
/// and never contain self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    /// Build from adjacency lists; lists are symmetrized, sorted and deduplicated.
    pub fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Self {
        let n = adj.len();
        let mut extra: Vec<(u32, u32)> = Vec::new();
        for (u, list) in adj.iter().enumerate() {
            for &v in list {
                extra.push((v, u as u32));
            }
        }
        for (v, u) in extra {
            adj[v as usize].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (u, mut list) in adj.into_iter().enumerate() {
            list.sort_unstable();
            list.dedup();
            list.retain(|&v| v as usize != u);
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    /// Build from an edge list on `n` vertices.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v as u32);
        }
        Self::from_adjacency(adj)
    }

    /// Trusts that the lists are already symmetric, sorted and loop-free.
    pub(crate) fn from_sorted_symmetric(adj: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        offsets.push(0);
        for list in adj {
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count())
            .flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v as usize)))
            .filter(|&(u, v)| u < v)
    }

    /// Hop distances from `src`; `u32::MAX` marks unreachable vertices.
    pub fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }

    /// Component label per vertex, labels in order of first appearance.
    pub fn components(&self) -> Vec<u32> {
        let n = self.vertex_count();
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v as usize] == u32::MAX {
                        label[v as usize] = next;
                        stack.push(v as usize);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || self.components().iter().all(|&c| c == 0)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    vertex: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a vertex-weighted search: cost of the cheapest path ending at
/// each vertex (endpoint weights included) and predecessor links.
pub struct VertexSearch {
    pub cost: Vec<f64>,
    pub prev: Vec<u32>,
}

pub const NO_PREV: u32 = u32::MAX;

impl VertexSearch {
    pub fn path_to(&self, mut v: usize) -> Vec<usize> {
        let mut path = vec![v];
        while self.prev[v] != NO_PREV {
            v = self.prev[v] as usize;
            path.push(v);
        }
        path.reverse();
        path
    }
}

/// Multi-source Dijkstra where a path costs the sum of its vertex weights.
///
/// `stop` is consulted when a vertex is settled; returning true ends the
/// search early. Settlement order is deterministic (cost, then index).
pub fn vertex_weighted_search<F: FnMut(usize, f64) -> bool>(
    graph: &Graph,
    weight: &[f64],
    sources: impl IntoIterator<Item = usize>,
    bound: f64,
    mut stop: F,
) -> VertexSearch {
    let n = graph.vertex_count();
    let mut cost = vec![f64::INFINITY; n];
    let mut prev = vec![NO_PREV; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for s in sources {
        if weight[s] < cost[s] {
            cost[s] = weight[s];
            heap.push(State { cost: weight[s], vertex: s });
        }
    }
    while let Some(State { cost: c, vertex: u }) = heap.pop() {
        if done[u] || c > cost[u] {
            continue;
        }
        if c >= bound {
            break;
        }
        done[u] = true;
        if stop(u, c) {
            break;
        }
        for &v in graph.neighbors(u) {
            let v = v as usize;
            if done[v] {
                continue;
            }
            let next = c + weight[v];
            if next < cost[v] {
                cost[v] = next;
                prev[v] = u as u32;
                heap.push(State { cost: next, vertex: v });
            }
        }
    }
    VertexSearch { cost, prev }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_drops_loops() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 1), (2, 1), (0, 1)]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn grid_search_counts_vertices() {
        // 3x3 grid, corner to opposite corner, unit weights
        let mut edges = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                let v = r * 3 + c;
                if c < 2 {
                    edges.push((v, v + 1));
                }
                if r < 2 {
                    edges.push((v, v + 3));
                }
            }
        }
        let g = Graph::from_edges(9, &edges);
        let s = vertex_weighted_search(&g, &[1.0; 9], [0], f64::INFINITY, |_, _| false);
        assert_eq!(s.cost[8], 5.0);
        assert_eq!(s.path_to(8).len(), 5);
    }
}
