use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PathFamily, Terminals};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hierarchy::Hierarchy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Paths at level `base_level + k` from inside `B` to outside `L·B`.
    Annulus { base_level: usize, base: usize, k: usize, l: f64 },
    /// Paths at level `base_level + k` joining `L1·B` and the outside of `L2·B`.
    Ring { base_level: usize, base: usize, k: usize, l: f64, l1: f64, l2: f64 },
    /// Paths at `level` whose center set has diameter at least `delta`.
    LargeScale { level: usize, delta: f64 },
    Custom,
}

fn depth_check(h: &Hierarchy, op: &'static str, base_level: usize, base: usize, k: usize) -> Result<usize> {
    let level = base_level + k;
    if level > h.n_max() {
        return Err(Error::Precondition {
            op,
            msg: format!("level {base_level} + k = {k} needs hierarchy depth {level}, built to {}", h.n_max()),
        });
    }
    if base >= h.covering.level(base_level).len() {
        return Err(Error::Argument { op, msg: format!("no element {base} at level {base_level}") });
    }
    Ok(level)
}

/// Family on `level` given each vertex's distance to the base center:
/// sources by `is_source`, targets are vertices at distance `>= outer`, and
/// only vertices inside `outer` plus targets adjacent to them are kept.
fn radial(h: &Hierarchy, kind: FamilyKind, level: usize, center: usize, outer: f64, is_source: impl Fn(f64) -> bool) -> PathFamily {
    let space = &h.space;
    let centers = h.covering.level(level);
    let graph = h.nerve.level(level);
    let d: Vec<f64> = centers.iter().map(|&x| space.dist(x, center)).collect();
    let inside = |v: usize| d[v] < outer;
    let mut keep = vec![false; centers.len()];
    for v in 0..centers.len() {
        if inside(v) {
            keep[v] = true;
            for &u in graph.neighbors(v) {
                keep[u as usize] = true;
            }
        }
    }
    // A source outside `outer` is a one-vertex path; keep it.
    for v in 0..centers.len() {
        if is_source(d[v]) {
            keep[v] = true;
        }
    }
    let vertices: Vec<usize> = (0..centers.len()).filter(|&v| keep[v]).collect();
    let mut local = vec![u32::MAX; centers.len()];
    for (i, &v) in vertices.iter().enumerate() {
        local[v] = i as u32;
    }
    let adj = vertices
        .iter()
        .map(|&v| {
            graph
                .neighbors(v)
                .iter()
                .filter(|&&u| local[u as usize] != u32::MAX && (inside(v) || inside(u as usize)))
                .map(|&u| local[u as usize])
                .collect()
        })
        .collect();
    let source = vertices.iter().map(|&v| is_source(d[v])).collect();
    let target = vertices.iter().map(|&v| !inside(v)).collect();
    PathFamily {
        kind,
        level,
        level_size: centers.len(),
        graph: Graph::from_sorted_symmetric(adj),
        vertices,
        terminals: Terminals::SourceTarget { source, target },
    }
}

impl PathFamily {
    /// `Γ_{k,L}(B)` for `B = (base_level, base)`.
    pub fn annulus(h: &Hierarchy, base_level: usize, base: usize, k: usize, l: f64) -> Result<Self> {
        const OP: &str = "modulus::annulus_family";
        if !(l > 1.0) {
            return Err(Error::Parameter { op: OP, msg: format!("L = {l} must exceed 1") });
        }
        let level = depth_check(h, OP, base_level, base, k)?;
        let r = h.radius(base_level);
        let outer = l * h.kappa() * r;
        let center = h.covering.center(base_level, base);
        Ok(radial(h, FamilyKind::Annulus { base_level, base, k, l }, level, center, outer, |d| d < r))
    }

    /// `Γ'_k(B)` with `L1 = 1 + 1/a` and `L2 = L - 1/a`.
    pub fn ring(h: &Hierarchy, base_level: usize, base: usize, k: usize, l: f64) -> Result<Self> {
        const OP: &str = "modulus::ring_family";
        let a = h.covering.a;
        let (l1, l2) = (1.0 + 1.0 / a, l - 1.0 / a);
        if !(l2 > 0.0) || !(l > 1.0) {
            return Err(Error::Parameter { op: OP, msg: format!("L = {l} leaves no ring for a = {a}") });
        }
        let level = depth_check(h, OP, base_level, base, k)?;
        let r = h.radius(base_level);
        let rk = h.radius(level);
        let kappa = h.kappa();
        let center = h.covering.center(base_level, base);
        let reach = l1 * kappa * r + rk;
        Ok(radial(h, FamilyKind::Ring { base_level, base, k, l, l1, l2 }, level, center, l2 * kappa * r, |d| d < reach))
    }

    /// `Γ_δ` at one level: paths whose centers span at least `delta`.
    pub fn large_scale(h: &Hierarchy, level: usize, delta: f64) -> Result<Self> {
        const OP: &str = "modulus::large_scale_family";
        if !(delta > 0.0 && delta <= h.space.diameter()) {
            return Err(Error::Parameter { op: OP, msg: format!("delta = {delta} outside (0, diameter]") });
        }
        if level > h.n_max() {
            return Err(Error::Precondition { op: OP, msg: format!("level {level} beyond hierarchy depth {}", h.n_max()) });
        }
        let centers = h.covering.level(level);
        let space = &h.space;
        let mut fam = PathFamily::from_separation(h.nerve.level(level).clone(), |u, v| {
            space.dist(centers[u], centers[v]) >= delta
        });
        fam.kind = FamilyKind::LargeScale { level, delta };
        fam.level = level;
        Ok(fam)
    }
}
