//! A space together with its covering, genealogy and nerve.

use crate::covering::{assign_genealogy, build_covering_with, CoveringHierarchy, CoveringOptions, Genealogy};
use crate::error::Result;
use crate::nerve::{build_nerve, NerveGraph};
use crate::space::MetricSpace;

#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub space: MetricSpace,
    pub covering: CoveringHierarchy,
    pub genealogy: Genealogy,
    pub nerve: NerveGraph,
}

impl Hierarchy {
    pub fn build(space: MetricSpace, a: f64, lambda: f64, n_max: usize) -> Result<Self> {
        Self::build_with(space, a, lambda, n_max, CoveringOptions::default())
    }

    pub fn build_with(space: MetricSpace, a: f64, lambda: f64, n_max: usize, opts: CoveringOptions) -> Result<Self> {
        let covering = build_covering_with(&space, a, n_max, opts)?;
        let genealogy = assign_genealogy(&space, &covering);
        let nerve = build_nerve(&space, &covering, &genealogy, lambda)?;
        Ok(Hierarchy { space, covering, genealogy, nerve })
    }

    pub fn n_max(&self) -> usize {
        self.covering.n_max()
    }

    pub fn radius(&self, n: usize) -> f64 {
        self.covering.radius(n)
    }

    pub fn kappa(&self) -> f64 {
        self.covering.kappa
    }

    /// Distance between the centers of `(n, i)` and `(m, j)`.
    pub fn center_dist(&self, n: usize, i: usize, m: usize, j: usize) -> f64 {
        self.space.dist(self.covering.center(n, i), self.covering.center(m, j))
    }
}
