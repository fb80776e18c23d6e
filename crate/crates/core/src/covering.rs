//! Covering hierarchies by greedy separated nets, and their genealogy.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::inv_pow;
use crate::space::MetricSpace;
use crate::spatial::PointIndex;

/// Quasiball constant of maximal separated nets.
pub const KAPPA: f64 = 2.0;

/// Smallest scale ratio for which the structural lemmas on the nerve are
/// guaranteed: `6 κ² max(λ, K_P)`.
pub fn theoretical_min_a(lambda: f64, perfectness: f64) -> f64 {
    6.0 * KAPPA * KAPPA * lambda.max(perfectness)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringHierarchy {
    pub a: f64,
    pub kappa: f64,
    /// `levels[n]` lists the point indices of the level-`n` centers, ascending.
    pub levels: Vec<Vec<usize>>,
}

impl CoveringHierarchy {
    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[usize] {
        &self.levels[n]
    }

    /// `r_n = a^{-n}`.
    pub fn radius(&self, n: usize) -> f64 {
        inv_pow(self.a, n)
    }

    /// Point index of the center of element `j` at level `n`.
    pub fn center(&self, n: usize, j: usize) -> usize {
        self.levels[n][j]
    }

    pub fn element_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoveringOptions {
    /// Extra levels of headroom demanded between the deepest radius and the
    /// space resolution.
    pub resolution_margin: usize,
}

/// Deepest `n_max` the space resolution admits for ratio `a`.
pub fn deepest_level(space: &MetricSpace, a: f64, resolution_margin: usize) -> usize {
    let res = space.resolution() * (1.0 - 1e-9);
    if space.len() <= 1 || !(a > 1.0) {
        return 0;
    }
    let mut n = 0;
    while inv_pow(a, n + 1 + resolution_margin) >= res {
        n += 1;
    }
    n
}

pub fn build_covering(space: &MetricSpace, a: f64, n_max: usize) -> Result<CoveringHierarchy> {
    build_covering_with(space, a, n_max, CoveringOptions::default())
}

pub fn build_covering_with(space: &MetricSpace, a: f64, n_max: usize, opts: CoveringOptions) -> Result<CoveringHierarchy> {
    const OP: &str = "coverings::build_covering";
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::Parameter { op: OP, msg: format!("scale ratio a = {a} must exceed 1") });
    }
    if space.is_empty() {
        return Err(Error::Argument { op: OP, msg: "empty space".into() });
    }
    let res = space.resolution() * (1.0 - 1e-9);
    if space.len() > 1 {
        for n in 0..=n_max + opts.resolution_margin {
            if inv_pow(a, n) < res {
                return Err(Error::Precondition {
                    op: OP,
                    msg: format!(
                        "level {n} radius {} is finer than the space resolution {}; increase depth",
                        inv_pow(a, n),
                        space.resolution()
                    ),
                });
            }
        }
    }
    let all: Vec<usize> = (0..space.len()).collect();
    let mut levels = vec![vec![0usize]];
    for n in 1..=n_max {
        let r = inv_pow(a, n);
        let mut net = PointIndex::empty(space, &all, r);
        for i in 0..space.len() {
            if !net.any_within(i, r) {
                net.insert(i);
            }
        }
        for i in 0..space.len() {
            if !net.any_within(i, r) {
                return Err(Error::Invariant { op: OP, msg: format!("point {i} uncovered at level {n}") });
            }
        }
        levels.push(net.items().to_vec());
    }
    Ok(CoveringHierarchy { a, kappa: KAPPA, levels })
}

/// Parent links and child lists. Element `j` of level `n` is written `(n, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genealogy {
    /// `parent[n][j]` is the index at level `n - 1`; `parent[0]` is empty.
    pub parent: Vec<Vec<u32>>,
    /// `children[n][j]` lists indices at level `n + 1`.
    pub children: Vec<Vec<Vec<u32>>>,
    /// Largest child count per level.
    pub max_children: Vec<usize>,
}

impl Genealogy {
    pub fn parent_of(&self, n: usize, j: usize) -> Option<usize> {
        if n == 0 {
            None
        } else {
            Some(self.parent[n][j] as usize)
        }
    }

    pub fn children_of(&self, n: usize, j: usize) -> &[u32] {
        &self.children[n][j]
    }

    /// Ancestor of `(n, j)` at level `m <= n`.
    pub fn ancestor(&self, n: usize, mut j: usize, m: usize) -> usize {
        for l in (m + 1..=n).rev() {
            j = self.parent[l][j] as usize;
        }
        j
    }
}

/// Nearest-center parents with lowest-index tie-break.
pub fn assign_genealogy(space: &MetricSpace, h: &CoveringHierarchy) -> Genealogy {
    let levels = h.levels.len();
    let mut parent = vec![Vec::new()];
    let mut children: Vec<Vec<Vec<u32>>> = h.levels.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for n in 1..levels {
        let up = &h.levels[n - 1];
        let r = h.radius(n - 1);
        let index = PointIndex::new(space, up, r);
        let mut par = Vec::with_capacity(h.levels[n].len());
        for (j, &x) in h.levels[n].iter().enumerate() {
            let p = index
                .nearest_within(x, r)
                .or_else(|| index.nearest_within(x, f64::INFINITY))
                .map(|(slot, _)| slot)
                .unwrap_or(0);
            par.push(p as u32);
            children[n - 1][p].push(j as u32);
        }
        parent.push(par);
    }
    let max_children = children.iter().map(|l| l.iter().map(Vec::len).max().unwrap_or(0)).collect();
    Genealogy { parent, children, max_children }
}

/// Elements of level `l` descending from `(level, elem)`, ascending.
pub fn descendants(g: &Genealogy, level: usize, elem: usize, l: usize) -> Result<Vec<usize>> {
    const OP: &str = "coverings::descendants";
    if l <= level {
        return Err(Error::Argument { op: OP, msg: format!("target level {l} not below element level {level}") });
    }
    if l >= g.children.len() {
        return Err(Error::Argument { op: OP, msg: format!("target level {l} beyond hierarchy depth {}", g.children.len() - 1) });
    }
    let mut front = vec![elem];
    for n in level..l {
        let mut next = Vec::new();
        for &b in &front {
            next.extend(g.children[n][b].iter().map(|&c| c as usize));
        }
        front = next;
    }
    front.sort_unstable();
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{make_space, Generator};

    #[test]
    fn interval_level_two_quarters() {
        let s = make_space(&Generator::Interval, 4).unwrap();
        let h = build_covering(&s, 2.0, 3).unwrap();
        let xs: Vec<f64> = h.level(2).iter().map(|&i| s.point(i)[0]).collect();
        assert_eq!(xs.len(), 4);
        // one center per dyadic quarter, spaced exactly 1/4
        for (q, x) in xs.iter().enumerate() {
            assert!(*x > q as f64 / 4.0 && *x < (q + 1) as f64 / 4.0);
        }
        for w in xs.windows(2) {
            assert_eq!(w[1] - w[0], 0.25);
        }
    }

    #[test]
    fn single_point_hierarchy() {
        let s = make_space(&Generator::Interval, 0).unwrap();
        let h = build_covering(&s, 3.0, 0).unwrap();
        assert_eq!(h.levels, vec![vec![0]]);
    }

    #[test]
    fn cantor_levels_double() {
        let s = make_space(&Generator::cantor(), 5).unwrap();
        let h = build_covering(&s, 3.0, 4).unwrap();
        for n in 0..=4 {
            assert_eq!(h.level(n).len(), 1 << n);
        }
        let g = assign_genealogy(&s, &h);
        for n in 0..4 {
            assert!(g.children[n].iter().all(|c| c.len() == 2));
        }
    }

    #[test]
    fn resolution_precondition_names_level() {
        let s = make_space(&Generator::Interval, 3).unwrap();
        let e = build_covering(&s, 2.0, 5).unwrap_err();
        match e {
            Error::Precondition { msg, .. } => assert!(msg.contains("level 4")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(build_covering(&s, 1.0, 2), Err(Error::Parameter { .. })));
    }

    #[test]
    fn interval_genealogy() {
        let s = make_space(&Generator::Interval, 4).unwrap();
        let h = build_covering(&s, 2.0, 4).unwrap();
        let g = assign_genealogy(&s, &h);
        assert!(g.parent[1].iter().all(|&p| p == 0));
        // level-2 center 9/32 is equidistant from 1/32 and 17/32; the lower index wins
        let j = h.level(2).iter().position(|&i| s.point(i)[0] == 9.0 / 32.0).unwrap();
        assert_eq!(h.center(1, g.parent[2][j] as usize), 0);
        for n in 0..4 {
            for b in 0..h.level(n).len() {
                assert_eq!(descendants(&g, n, b, n + 1).unwrap().len(), 2);
            }
        }
    }

    #[test]
    fn descendants_partition_levels() {
        let s = make_space(&Generator::SierpinskiGasket, 5).unwrap();
        let h = build_covering(&s, 2.0, 5).unwrap();
        let g = assign_genealogy(&s, &h);
        assert_eq!(descendants(&g, 0, 0, 4).unwrap(), (0..h.level(4).len()).collect::<Vec<_>>());
        let mut seen = vec![0u8; h.level(5).len()];
        for b in 0..h.level(2).len() {
            for d in descendants(&g, 2, b, 5).unwrap() {
                seen[d] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(matches!(descendants(&g, 2, 0, 2), Err(Error::Argument { .. })));
    }
}
