//! Nerve graphs `G_k`, the genealogy graph `Z_d`, and structural checks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covering::{theoretical_min_a, CoveringHierarchy, Genealogy};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;
use crate::space::{estimate_uniform_perfectness, MetricSpace};
use crate::spatial::PointIndex;

/// Records whether the scale ratio meets the requirement under which the
/// structural lemmas are guaranteed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compliance {
    pub a: f64,
    pub required_a: f64,
    pub satisfied: bool,
    /// Properties guaranteed by the parameter choice.
    pub guaranteed: Vec<String>,
    /// Properties that only hold if verified empirically.
    pub empirical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerveGraph {
    pub lambda: f64,
    pub kappa: f64,
    pub a: f64,
    horizontal: Vec<Graph>,
    offsets: Vec<usize>,
    parent: Vec<Vec<u32>>,
    pub compliance: Compliance,
}

impl NerveGraph {
    pub fn levels(&self) -> usize {
        self.horizontal.len()
    }

    /// Horizontal graph `G_n` on the elements of level `n`.
    pub fn level(&self, n: usize) -> &Graph {
        &self.horizontal[n]
    }

    /// Global vertex id of `(n, j)` in `Z_d`.
    pub fn vertex(&self, n: usize, j: usize) -> usize {
        self.offsets[n] + j
    }

    /// Inverse of [`vertex`](Self::vertex).
    pub fn locate(&self, v: usize) -> (usize, usize) {
        let n = self.offsets.partition_point(|&o| o <= v) - 1;
        (n, v - self.offsets[n])
    }

    pub fn vertex_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn parent(&self, n: usize, j: usize) -> Option<usize> {
        (n > 0).then(|| self.parent[n][j] as usize)
    }

    /// `B ~ B'` at one level: equal or horizontally adjacent.
    pub fn related(&self, n: usize, i: usize, j: usize) -> bool {
        i == j || self.horizontal[n].has_edge(i, j)
    }

    pub fn max_degree(&self, n: usize) -> usize {
        self.horizontal[n].max_degree()
    }

    /// `Z_d`: genealogy tree plus all horizontal edges.
    pub fn z_graph(&self) -> Graph {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for n in 0..self.levels() {
            for (i, j) in self.horizontal[n].edges() {
                adj[self.vertex(n, i)].push(self.vertex(n, j) as u32);
            }
            if n > 0 {
                for (j, &p) in self.parent[n].iter().enumerate() {
                    adj[self.vertex(n - 1, p as usize)].push(self.vertex(n, j) as u32);
                }
            }
        }
        Graph::from_adjacency(adj)
    }

    /// Plain-text edge list, one `level u v H|V` line per edge. Vertical
    /// edges are listed under the child's level with `u` the parent index.
    pub fn edge_list(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        for n in 0..self.levels() {
            for (i, j) in self.horizontal[n].edges() {
                let _ = writeln!(out, "{n} {i} {j} H");
            }
            if n > 0 {
                for (j, &p) in self.parent[n].iter().enumerate() {
                    let _ = writeln!(out, "{n} {p} {j} V");
                }
            }
        }
        out
    }
}

/// Adjacency of the level-`n` centers under `d < radius`.
pub(crate) fn proximity_graph(space: &MetricSpace, centers: &[usize], radius: f64) -> Graph {
    let index = PointIndex::new(space, centers, radius);
    let adj = centers
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut list = Vec::new();
            index.for_each_within(x, radius, |slot, _| {
                if slot != i {
                    list.push(slot as u32);
                }
            });
            list.sort_unstable();
            list
        })
        .collect();
    Graph::from_sorted_symmetric(adj)
}

pub fn build_nerve(space: &MetricSpace, h: &CoveringHierarchy, g: &Genealogy, lambda: f64) -> Result<NerveGraph> {
    const OP: &str = "nerve::build_nerve";
    if !(lambda >= 3.0) {
        return Err(Error::Parameter { op: OP, msg: format!("lambda = {lambda} must be at least 3") });
    }
    let mut horizontal = Vec::with_capacity(h.levels.len());
    let mut offsets = vec![0];
    for n in 0..h.levels.len() {
        let radius = 2.0 * lambda * h.kappa * h.radius(n);
        horizontal.push(proximity_graph(space, h.level(n), radius));
        offsets.push(offsets[n] + h.level(n).len());
    }
    Ok(NerveGraph {
        lambda,
        kappa: h.kappa,
        a: h.a,
        horizontal,
        offsets,
        parent: g.parent.clone(),
        compliance: compliance(space, h.a, lambda),
    })
}

fn compliance(space: &MetricSpace, a: f64, lambda: f64) -> Compliance {
    let items = ["(i)", "(ii)", "(iii)", "(iv)", "(v)", "(vi)", "(vii)"];
    // max(λ, K_P) ≥ λ, so the perfectness estimate only matters when a clears 6κ²λ.
    let mut required = theoretical_min_a(lambda, 1.0);
    if a >= required {
        required = theoretical_min_a(lambda, estimate_uniform_perfectness(space, 256, 0));
    }
    let satisfied = a >= required;
    let (g, e): (Vec<String>, Vec<String>) = if satisfied {
        (items.iter().map(|s| String::from(*s)).collect(), Vec::new())
    } else {
        // (i)-(iii) only use the net geometry and hold for any a > 1
        (
            items[..3].iter().map(|s| String::from(*s)).collect(),
            items[3..].iter().map(|s| String::from(*s)).collect(),
        )
    };
    Compliance { a, required_a: required, satisfied, guaranteed: g, empirical: e }
}

pub const WITNESS_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub item: String,
    pub applicable: u64,
    pub satisfied: u64,
    pub violated: u64,
    /// Offending tuples as `[level, indices...]`, at most [`WITNESS_CAP`].
    pub witnesses: Vec<Vec<usize>>,
}

impl ItemReport {
    fn new(item: &str) -> Self {
        ItemReport { item: String::from(item), applicable: 0, satisfied: 0, violated: 0, witnesses: Vec::new() }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Vec<usize>) {
        self.applicable += 1;
        if ok {
            self.satisfied += 1;
        } else {
            self.violated += 1;
            if self.witnesses.len() < WITNESS_CAP {
                self.witnesses.push(witness());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub max_level: usize,
    pub compliant: bool,
    pub items: Vec<ItemReport>,
}

impl PropertyReport {
    pub fn item(&self, name: &str) -> Option<&ItemReport> {
        self.items.iter().find(|i| i.item == name)
    }
}

/// Exhaustively tests items (iv)-(vii) of the structural lemma on all
/// tuples whose deepest level is at most `max_level`.
pub fn check_graph_properties(
    space: &MetricSpace,
    nerve: &NerveGraph,
    h: &CoveringHierarchy,
    g: &Genealogy,
    max_level: usize,
) -> PropertyReport {
    let top = max_level.min(h.n_max());
    let kappa = h.kappa;
    let lambda = nerve.lambda;
    let mut iv = ItemReport::new("(iv)");
    let mut v = ItemReport::new("(v)");
    let mut vi = ItemReport::new("(vi)");
    let mut vii = ItemReport::new("(vii)");
    let slack = 1.0 + 1e-12;
    for n in 0..top {
        let (rn, rn1) = (h.radius(n), h.radius(n + 1));
        let up = h.level(n);
        let down = h.level(n + 1);
        let up_index = PointIndex::new(space, up, 2.0 * rn * slack);
        let down_index = PointIndex::new(space, down, 4.0 * rn * slack);

        // level-n elements within 2 r_n of each level-(n+1) center
        let near: Vec<Vec<usize>> = down
            .iter()
            .map(|&x| {
                let mut c = Vec::new();
                up_index.for_each_within(x, 2.0 * rn * slack, |slot, p| {
                    if space.dist(x, p) <= 2.0 * rn {
                        c.push(slot);
                    }
                });
                c.sort_unstable();
                c
            })
            .collect();

        for (b, &xb) in down.iter().enumerate() {
            let mut partners = Vec::new();
            down_index.for_each_within(xb, 4.0 * rn * slack, |slot, p| {
                if slot > b && space.dist(xb, p) <= 4.0 * rn {
                    partners.push(slot);
                }
            });
            partners.sort_unstable();
            for &b2 in &partners {
                for &c in &near[b] {
                    for &c2 in &near[b2] {
                        iv.record(nerve.related(n, c, c2), || vec![n, b, b2, c, c2]);
                    }
                }
            }
        }

        let cross = lambda * kappa * (rn1 + rn);
        let cross_index = PointIndex::new(space, up, cross);
        for (b, &xb) in down.iter().enumerate() {
            let parent = g.parent[n + 1][b] as usize;
            let mut cs = Vec::new();
            cross_index.for_each_within(xb, cross, |slot, _| cs.push(slot));
            cs.sort_unstable();
            for c in cs {
                v.record(nerve.related(n, parent, c), || vec![n, b, c, parent]);
            }
        }

        let inner = rn / kappa;
        let inner_index = PointIndex::new(space, down, inner);
        for (b, &xb) in up.iter().enumerate() {
            let mut count = 0;
            inner_index.for_each_within(xb, inner, |_, _| count += 1);
            vi.record(count >= 2, || vec![n, b, count]);
        }

        let near_index = PointIndex::new(space, up, kappa * rn1);
        for (b2, &xb2) in down.iter().enumerate() {
            let mut bs = Vec::new();
            near_index.for_each_within(xb2, kappa * rn1, |slot, _| bs.push(slot));
            bs.sort_unstable();
            for b in bs {
                let graph = nerve.level(n + 1);
                let bad = core::iter::once(b2 as u32)
                    .chain(graph.neighbors(b2).iter().copied())
                    .find(|&w| g.parent[n + 1][w as usize] as usize != b);
                vii.record(bad.is_none(), || vec![n, b, b2, bad.unwrap_or(0) as usize]);
            }
        }
    }
    PropertyReport { max_level: top, compliant: nerve.compliance.satisfied, items: vec![iv, v, vi, vii] }
}

/// Four-point defect of a connected graph, `(S1 - S2) / 2` with `S1 >= S2`
/// the two largest of the three pair sums, maximized over quadruples drawn
/// from a pool of sampled vertices. Small pools are checked exhaustively.
pub fn four_point_delta(graph: &Graph, sample_count: usize, seed: u64) -> Result<f64> {
    const OP: &str = "nerve::sample_hyperbolicity";
    let n = graph.vertex_count();
    if n == 0 || !graph.is_connected() {
        return Err(Error::Structural { op: OP, msg: String::from("graph is empty or disconnected") });
    }
    let mut rng = rng::stream(seed, OP);
    let pool: Vec<usize> = if n <= 48 {
        (0..n).collect()
    } else {
        let mut chosen = Vec::new();
        let mut taken = vec![false; n];
        while chosen.len() < 48 {
            let v = rng.random_range(0..n);
            if !taken[v] {
                taken[v] = true;
                chosen.push(v);
            }
        }
        chosen
    };
    let m = pool.len();
    let dist: Vec<Vec<u32>> = pool.iter().map(|&s| graph.bfs(s)).collect();
    let d = |i: usize, j: usize| dist[i][pool[j]] as i64;
    let defect = |q: [usize; 4]| {
        let [x, y, z, w] = q;
        let mut s = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
        s.sort_unstable();
        (s[2] - s[1]) as f64 / 2.0
    };
    let mut worst: f64 = 0.0;
    let total = if m >= 4 { m * (m - 1) * (m - 2) * (m - 3) / 24 } else { 0 };
    if total <= sample_count.max(1) {
        for x in 0..m {
            for y in x + 1..m {
                for z in y + 1..m {
                    for w in z + 1..m {
                        worst = worst.max(defect([x, y, z, w]));
                    }
                }
            }
        }
    } else {
        for _ in 0..sample_count {
            let q = [0; 4].map(|_| rng.random_range(0..m));
            worst = worst.max(defect(q));
        }
    }
    Ok(worst)
}

/// Four-point defect of `Z_d` with hop distances.
pub fn sample_hyperbolicity(nerve: &NerveGraph, sample_count: usize, seed: u64) -> Result<f64> {
    four_point_delta(&nerve.z_graph(), sample_count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{assign_genealogy, build_covering};
    use crate::space::{make_space, Generator};

    fn nerve_of(gen: Generator, depth: usize, a: f64, n_max: usize) -> (MetricSpace, CoveringHierarchy, Genealogy, NerveGraph) {
        let s = make_space(&gen, depth).unwrap();
        let h = build_covering(&s, a, n_max).unwrap();
        let g = assign_genealogy(&s, &h);
        let nv = build_nerve(&s, &h, &g, 3.0).unwrap();
        (s, h, g, nv)
    }

    #[test]
    fn interval_adjacency_is_eleven_steps() {
        let (_, h, _, nv) = nerve_of(Generator::Interval, 7, 2.0, 6);
        for n in 0..=6 {
            let graph = nv.level(n);
            for i in 0..h.level(n).len() {
                for j in 0..h.level(n).len() {
                    if i != j {
                        assert_eq!(graph.has_edge(i, j), i.abs_diff(j) <= 11, "level {n} {i} {j}");
                    }
                }
            }
        }
        assert_eq!(nv.level(0).edge_count(), 0);
        assert!(nv.z_graph().is_connected());
    }

    #[test]
    fn cantor_halves_split() {
        let (s, h, _, nv) = nerve_of(Generator::cantor(), 8, 3.0, 7);
        // 12 * 3^{-n} < 1/3 first holds at n = 4
        for n in 4..=7 {
            let graph = nv.level(n);
            for (i, j) in graph.edges() {
                let (x, y) = (s.point(h.center(n, i))[0], s.point(h.center(n, j))[0]);
                assert_eq!(x < 0.5, y < 0.5, "cross edge at level {n}");
            }
        }
        let l3 = nv.level(3);
        assert!(l3.edges().any(|(i, j)| (s.point(h.center(3, i))[0] < 0.5) != (s.point(h.center(3, j))[0] < 0.5)));
    }

    #[test]
    fn lambda_checked() {
        let s = make_space(&Generator::Interval, 2).unwrap();
        let h = build_covering(&s, 2.0, 2).unwrap();
        let g = assign_genealogy(&s, &h);
        assert!(build_nerve(&s, &h, &g, 2.0).is_err());
    }

    #[test]
    fn interval_item_v_holds() {
        let (s, h, g, nv) = nerve_of(Generator::Interval, 6, 2.0, 5);
        let rep = check_graph_properties(&s, &nv, &h, &g, 5);
        let v = rep.item("(v)").unwrap();
        assert!(v.applicable > 0);
        assert_eq!(v.violated, 0);
        assert!(!rep.compliant);
    }

    #[test]
    fn one_level_is_vacuous() {
        let (s, h, g, nv) = nerve_of(Generator::Interval, 2, 2.0, 0);
        let rep = check_graph_properties(&s, &nv, &h, &g, 5);
        assert!(rep.items.iter().all(|i| i.applicable == 0));
    }

    #[test]
    fn four_point_tree_and_cycle() {
        let tree = Graph::from_edges(7, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]);
        assert_eq!(four_point_delta(&tree, 1000, 1).unwrap(), 0.0);
        let cycle = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert_eq!(four_point_delta(&cycle, 1000, 1).unwrap(), 1.0);
        let split = Graph::from_edges(4, &[(0, 1), (2, 3)]);
        assert!(matches!(four_point_delta(&split, 10, 1), Err(Error::Structural { .. })));
    }

    #[test]
    fn edge_list_format() {
        let (_, _, _, nv) = nerve_of(Generator::Interval, 2, 2.0, 1);
        let text = nv.edge_list();
        assert!(text.lines().all(|l| l.ends_with(" H") || l.ends_with(" V")));
        assert_eq!(text.lines().filter(|l| l.ends_with('V')).count(), 2);
    }
}
