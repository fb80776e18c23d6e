use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Levels;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::rng;
use crate::spatial::PointIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub level: usize,
    /// Elements of `level` whose `α`-dilate contains both points.
    pub elements: Vec<usize>,
    /// Largest potential over `elements`.
    pub pi: f64,
    /// Both points share an element at the deepest level, so the true
    /// level may be deeper than the hierarchy.
    pub capped: bool,
}

/// Metric `θ(x, y) = π(c_α(x, y))` on the space points.
pub struct GaugeMetric<'a> {
    h: &'a Hierarchy,
    pi: &'a Levels,
    pub alpha: f64,
    indices: Vec<PointIndex<'a>>,
}

/// Elements containing one point in their `α`-dilate, per level.
pub struct ThetaRow {
    x: usize,
    near: Vec<Vec<(usize, usize)>>,
}

impl<'a> GaugeMetric<'a> {
    pub fn new(h: &'a Hierarchy, pi: &'a Levels, alpha: f64) -> Result<Self> {
        const OP: &str = "gauge_builder::build_metric";
        if !(alpha >= 2.0) || !alpha.is_finite() {
            return Err(Error::Parameter { op: OP, msg: format!("alpha = {alpha} must be at least 2") });
        }
        if pi.len() != h.n_max() + 1 {
            return Err(Error::Argument { op: OP, msg: format!("potential has {} levels, hierarchy {}", pi.len(), h.n_max() + 1) });
        }
        let indices = (0..=h.n_max()).map(|n| PointIndex::new(&h.space, h.covering.level(n), alpha * h.kappa() * h.radius(n))).collect();
        Ok(GaugeMetric { h, pi, alpha, indices })
    }

    fn reach(&self, n: usize) -> f64 {
        self.alpha * self.h.kappa() * self.h.radius(n)
    }

    pub fn row(&self, x: usize) -> ThetaRow {
        let near = (0..=self.h.n_max())
            .map(|n| {
                let mut list = Vec::new();
                self.indices[n].for_each_within(x, self.reach(n), |slot, point| list.push((slot, point)));
                list.sort_unstable();
                list
            })
            .collect();
        ThetaRow { x, near }
    }

    pub fn center_in(&self, row: &ThetaRow, y: usize) -> Result<Center> {
        if row.x == y {
            return Err(Error::Argument { op: "gauge_builder::center", msg: format!("points coincide ({y})") });
        }
        let space = &self.h.space;
        for n in (0..=self.h.n_max()).rev() {
            let r = self.reach(n);
            let elements: Vec<usize> = row.near[n].iter().filter(|&&(_, c)| space.dist(y, c) < r).map(|&(j, _)| j).collect();
            if !elements.is_empty() {
                let pi = elements.iter().map(|&j| self.pi[n][j]).fold(0.0, f64::max);
                return Ok(Center { level: n, elements, pi, capped: n == self.h.n_max() });
            }
        }
        Err(Error::Resolution {
            op: "gauge_builder::center",
            msg: format!("no element contains {} and {y} in its {}-dilate", row.x, self.alpha),
        })
    }

    pub fn theta_in(&self, row: &ThetaRow, y: usize) -> f64 {
        if row.x == y {
            return 0.0;
        }
        self.center_in(row, y).map(|c| c.pi).unwrap_or(f64::INFINITY)
    }

    pub fn theta(&self, x: usize, y: usize) -> f64 {
        self.theta_in(&self.row(x), y)
    }

    /// `max θ(x, z) / (θ(x, y) + θ(y, z))` over random triples of distinct points.
    pub fn quasi_metric_constant(&self, triples: usize, seed: u64) -> f64 {
        let n = self.h.space.len();
        if n < 3 {
            return 1.0;
        }
        let mut rng = rng::stream(seed, "gauge_builder::quasi_metric");
        let mut worst: f64 = 0.0;
        for _ in 0..triples {
            let x = rng.random_range(0..n);
            let mut y = rng.random_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            let z = loop {
                let z = rng.random_range(0..n);
                if z != x && z != y {
                    break z;
                }
            };
            let rx = self.row(x);
            let ry = self.row(y);
            worst = worst.max(self.theta_in(&rx, z) / (self.theta_in(&rx, y) + self.theta_in(&ry, z)));
        }
        worst
    }
}

/// `c_α(x, y)` for one pair.
pub fn center(h: &Hierarchy, pi: &Levels, x: usize, y: usize, alpha: f64) -> Result<Center> {
    let metric = GaugeMetric::new(h, pi, alpha)?;
    metric.center_in(&metric.row(x), y)
}
