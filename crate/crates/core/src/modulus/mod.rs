//! Path families on nerve levels and their p-combinatorial modulus.

mod compact;
mod dual;
mod family;
mod flow;
mod measure;
mod oracle;
mod simplex;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{vertex_weighted_search, Graph};
use crate::math::powf;

pub use family::FamilyKind;
pub use measure::measure_admissible_weight;
pub use oracle::{brute_force_modulus, ORACLE_VERTEX_CAP};

/// Implicit family of paths in a graph: every path joining a source to a
/// target, or every path whose endpoints are far apart. Only the vertices
/// that can lie on a minimal such path are materialized.
#[derive(Debug, Clone)]
pub struct PathFamily {
    pub kind: FamilyKind,
    pub level: usize,
    level_size: usize,
    graph: Graph,
    vertices: Vec<usize>,
    terminals: Terminals,
}

#[derive(Debug, Clone)]
pub(crate) enum Terminals {
    SourceTarget { source: Vec<bool>, target: Vec<bool> },
    /// Bit rows: `far[u]` has bit `v` set when a path from `u` to `v` qualifies.
    Separated { far: Vec<Vec<u64>> },
}

pub(crate) fn bit(row: &[u64], v: usize) -> bool {
    row[v / 64] >> (v % 64) & 1 == 1
}

impl PathFamily {
    /// Paths in `graph` from any vertex of `sources` to any vertex of `targets`.
    pub fn from_sets(graph: Graph, sources: &[usize], targets: &[usize]) -> Self {
        let n = graph.vertex_count();
        let mut source = vec![false; n];
        let mut target = vec![false; n];
        sources.iter().for_each(|&s| source[s] = true);
        targets.iter().for_each(|&t| target[t] = true);
        PathFamily {
            kind: FamilyKind::Custom,
            level: 0,
            level_size: n,
            vertices: (0..n).collect(),
            graph,
            terminals: Terminals::SourceTarget { source, target },
        }
    }

    /// Paths in `graph` whose endpoints `u, v` satisfy `far(u, v)`; `far`
    /// must be symmetric.
    pub fn from_separation<F: Fn(usize, usize) -> bool>(graph: Graph, far: F) -> Self {
        let n = graph.vertex_count();
        let far = (0..n)
            .map(|u| {
                let mut row = vec![0u64; n.div_ceil(64)];
                for v in 0..n {
                    if far(u, v) {
                        row[v / 64] |= 1 << (v % 64);
                    }
                }
                row
            })
            .collect();
        PathFamily {
            kind: FamilyKind::Custom,
            level: 0,
            level_size: n,
            vertices: (0..n).collect(),
            graph,
            terminals: Terminals::Separated { far },
        }
    }

    /// Number of vertices in the level the family lives on.
    pub fn level_size(&self) -> usize {
        self.level_size
    }

    /// Level indices of the materialized vertices.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub(crate) fn terminals(&self) -> &Terminals {
        &self.terminals
    }

    pub fn sources(&self) -> Vec<usize> {
        match &self.terminals {
            Terminals::SourceTarget { source, .. } => (0..source.len()).filter(|&v| source[v]).map(|v| self.vertices[v]).collect(),
            Terminals::Separated { .. } => self.vertices.clone(),
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match &self.terminals {
            Terminals::SourceTarget { target, .. } => (0..target.len()).filter(|&v| target[v]).map(|v| self.vertices[v]).collect(),
            Terminals::Separated { .. } => self.vertices.clone(),
        }
    }

    /// True when the family contains no path.
    pub fn is_empty(&self) -> bool {
        let labels = self.graph.components();
        match &self.terminals {
            Terminals::SourceTarget { source, target } => {
                let comps = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
                let mut has_source = vec![false; comps];
                for v in 0..labels.len() {
                    if source[v] {
                        has_source[labels[v] as usize] = true;
                    }
                }
                !(0..labels.len()).any(|v| target[v] && has_source[labels[v] as usize])
            }
            Terminals::Separated { far } => {
                !(0..labels.len()).any(|u| (0..labels.len()).any(|v| labels[u] == labels[v] && bit(&far[u], v)))
            }
        }
    }

    fn to_level(&self, path: &[usize]) -> Vec<usize> {
        path.iter().map(|&v| self.vertices[v]).collect()
    }
}

/// Nonnegative vertex function on one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub level: usize,
    pub values: Vec<f64>,
}

impl WeightFunction {
    pub fn zeros(level: usize, size: usize) -> Self {
        WeightFunction { level, values: vec![0.0; size] }
    }

    /// `Vol_p(ρ) = Σ ρ^p`.
    pub fn volume(&self, p: f64) -> f64 {
        self.values.iter().map(|&x| if x > 0.0 { powf(x, p) } else { 0.0 }).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        WeightFunction { level: self.level, values: self.values.iter().map(|x| x * c).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    /// Minimum ρ-length over the family; `f64::INFINITY` if the family is empty.
    pub length: f64,
    /// A minimizing path as level indices.
    pub witness: Option<Vec<usize>>,
}

/// Vertex-weighted search for the cheapest path of the family.
pub fn shortest_admissibility(weights: &WeightFunction, family: &PathFamily) -> Result<Admissibility> {
    const OP: &str = "modulus::shortest_admissibility";
    if weights.level != family.level || weights.values.len() != family.level_size {
        return Err(Error::Argument {
            op: OP,
            msg: format!(
                "weights on level {} ({} values) but family on level {} ({} vertices)",
                weights.level,
                weights.values.len(),
                family.level,
                family.level_size
            ),
        });
    }
    let local: Vec<f64> = family.vertices.iter().map(|&v| weights.values[v]).collect();
    let cuts = separate(family, &local, f64::INFINITY, 1);
    Ok(match cuts.best {
        Some(path) => Admissibility { length: cuts.length, witness: Some(family.to_level(&path)) },
        None => Admissibility { length: f64::INFINITY, witness: None },
    })
}

pub(crate) struct Cuts {
    /// Minimum length over the family.
    pub length: f64,
    pub best: Option<Vec<usize>>,
    /// Paths shorter than the threshold, cheapest first, at most `limit`.
    pub violated: Vec<Vec<usize>>,
}

/// Separation oracle in local ids: the global minimum plus up to `limit`
/// distinct paths with length below `threshold`.
pub(crate) fn separate(family: &PathFamily, w: &[f64], threshold: f64, limit: usize) -> Cuts {
    let g = &family.graph;
    match &family.terminals {
        Terminals::SourceTarget { source, target } => {
            let sources = (0..source.len()).filter(|&v| source[v]);
            let mut hits: Vec<(f64, usize)> = Vec::new();
            let mut best = f64::INFINITY;
            let search = vertex_weighted_search(g, w, sources, f64::INFINITY, |u, c| {
                if target[u] {
                    best = best.min(c);
                    if c < threshold {
                        hits.push((c, u));
                    }
                    // settled in cost order, so later hits cost more
                    return c >= threshold || hits.len() >= limit.max(1);
                }
                false
            });
            let mut violated = Vec::new();
            let mut first = None;
            for &(_, t) in &hits {
                violated.push(search.path_to(t));
            }
            if let Some(&(c, t)) = hits.first() {
                best = c;
                first = Some(search.path_to(t));
            } else if best.is_finite() {
                let t = (0..target.len()).filter(|&t| target[t] && search.cost[t] == best).min().unwrap();
                first = Some(search.path_to(t));
            }
            Cuts { length: best, best: first, violated }
        }
        Terminals::Separated { far } => {
            let n = g.vertex_count();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
            let mut best = f64::INFINITY;
            let mut best_path = None;
            let mut found: Vec<(f64, Vec<usize>)> = Vec::new();
            for &u in &order {
                if w[u] >= best && (w[u] >= threshold || found.len() >= limit) {
                    break;
                }
                let bound = if found.len() >= limit { best } else { threshold.max(best) };
                let mut hit = None;
                let search = vertex_weighted_search(g, w, [u], bound, |v, c| {
                    if bit(&far[u], v) {
                        hit = Some((v, c));
                        true
                    } else {
                        false
                    }
                });
                if let Some((v, c)) = hit {
                    let path = search.path_to(v);
                    if c < best {
                        best = c;
                        best_path = Some(path.clone());
                    }
                    if c < threshold {
                        found.push((c, path));
                    }
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            found.truncate(limit);
            Cuts { length: best, best: best_path, violated: found.into_iter().map(|(_, p)| p).collect() }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationCap,
    /// Floating point accuracy ran out before the gap reached the tolerance.
    Stalled,
    EmptyFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    pub value: f64,
    /// Lower bound from the dual certificate.
    pub lower_bound: f64,
    pub dual_gap: f64,
    pub iterations: usize,
    pub status: Status,
    pub weights: WeightFunction,
    /// Binding paths as level indices.
    pub active_paths: Vec<Vec<usize>>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Cap on separation rounds.
    pub max_iter: usize,
    /// Violated paths added per separation round.
    pub cuts_per_round: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, max_iter: 10_000, cuts_per_round: 16 }
    }
}

/// `Mod_p` of the family with a dual certificate.
pub fn solve_modulus(family: &PathFamily, p: f64, opts: &SolverOptions) -> Result<ModulusResult> {
    const OP: &str = "modulus::solve_modulus";
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Argument { op: OP, msg: format!("exponent p = {p} must be positive") });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument { op: OP, msg: format!("tolerance {} must be positive", opts.tol) });
    }
    if family.is_empty() {
        return Ok(ModulusResult {
            value: 0.0,
            lower_bound: 0.0,
            dual_gap: 0.0,
            iterations: 0,
            status: Status::EmptyFamily,
            weights: WeightFunction::zeros(family.level, family.level_size),
            active_paths: Vec::new(),
            note: None,
        });
    }
    let local = if p > 1.0 {
        match family.terminals {
            Terminals::SourceTarget { .. } => compact::solve(family, p, opts),
            Terminals::Separated { .. } => dual::solve(family, p, opts),
        }
    } else {
        let mut sol = match family.terminals {
            Terminals::SourceTarget { .. } => flow::solve(family),
            Terminals::Separated { .. } => simplex::solve(family, opts),
        };
        if p < 1.0 {
            let vol: f64 = sol.rho.iter().filter(|&&x| x > 0.0).map(|&x| powf(x, p)).sum();
            sol.value = vol;
            sol.lower_bound = 1.0;
            sol.note = Some(String::from(
                "p < 1: value is the p-volume of a feasible weight; the modulus of a nonempty family is at least 1",
            ));
        }
        sol
    };
    let mut weights = WeightFunction::zeros(family.level, family.level_size);
    for (i, &v) in family.vertices.iter().enumerate() {
        weights.values[v] = local.rho[i];
    }
    Ok(ModulusResult {
        value: local.value,
        lower_bound: local.lower_bound,
        dual_gap: (local.value - local.lower_bound).max(0.0),
        iterations: local.iterations,
        status: local.status,
        weights,
        active_paths: local.active.iter().map(|p| family.to_level(p)).collect(),
        note: local.note,
    })
}

/// Solver output in local ids.
pub(crate) struct LocalSolution {
    pub value: f64,
    pub lower_bound: f64,
    pub rho: Vec<f64>,
    pub active: Vec<Vec<usize>>,
    pub iterations: usize,
    pub status: Status,
    pub note: Option<String>,
}

pub(crate) fn path_length(w: &[f64], path: &[usize]) -> f64 {
    path.iter().map(|&v| w[v]).sum()
}

#[cfg(test)]
mod tests;
