// Uniform-grid ball queries on coordinate spaces, linear scans otherwise.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{ceil, floor};
use crate::space::MetricSpace;

struct Grid {
    cell: f64,
    min: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    fn coord(&self, p: &[f64], c: usize) -> isize {
        floor((p[c] - self.min[c]) / self.cell) as isize
    }

    fn bucket_of(&self, p: &[f64]) -> usize {
        let mut b = 0;
        let mut stride = 1;
        for c in 0..p.len() {
            let k = self.coord(p, c).clamp(0, self.dims[c] as isize - 1) as usize;
            b += k * stride;
            stride *= self.dims[c];
        }
        b
    }
}

pub(crate) struct PointIndex<'a> {
    space: &'a MetricSpace,
    items: Vec<usize>,
    grid: Option<Grid>,
}

impl<'a> PointIndex<'a> {
    /// Empty index whose grid covers the points in `extent`, tuned for
    /// queries of radius about `radius`.
    pub(crate) fn empty(space: &'a MetricSpace, extent: &[usize], radius: f64) -> Self {
        let dim = space.dim();
        let grid = if space.has_coordinates() && dim <= 2 && extent.len() > 16 && radius > 0.0 {
            let mut min = [f64::INFINITY; 2];
            let mut max = [f64::NEG_INFINITY; 2];
            for &i in extent {
                let p = space.point(i);
                for c in 0..dim {
                    min[c] = min[c].min(p[c]);
                    max[c] = max[c].max(p[c]);
                }
            }
            let mut cell = space.base_radius(radius);
            if !cell.is_finite() || cell <= 0.0 {
                None
            } else {
                let budget = 4 * extent.len() + 64;
                let dims = loop {
                    let mut dims = [1usize; 2];
                    let mut total = 1usize;
                    for c in 0..dim {
                        dims[c] = floor((max[c] - min[c]) / cell) as usize + 1;
                        total = total.saturating_mul(dims[c]);
                    }
                    if total <= budget {
                        break dims;
                    }
                    cell *= 2.0;
                };
                let total = dims[0] * dims[1];
                Some(Grid { cell, min, dims, buckets: vec![Vec::new(); total] })
            }
        } else {
            None
        };
        PointIndex { space, items: Vec::new(), grid }
    }

    pub(crate) fn new(space: &'a MetricSpace, items: &[usize], radius: f64) -> Self {
        let mut idx = Self::empty(space, items, radius);
        for &i in items {
            idx.insert(i);
        }
        idx
    }

    /// Add a point; returns its slot.
    pub(crate) fn insert(&mut self, point: usize) -> usize {
        let slot = self.items.len();
        self.items.push(point);
        if let Some(g) = &mut self.grid {
            let b = g.bucket_of(self.space.point(point));
            g.buckets[b].push(slot as u32);
        }
        slot
    }

    pub(crate) fn items(&self) -> &[usize] {
        &self.items
    }

    /// Calls `f(slot, point)` for every indexed point with `dist(q, point) < r`.
    pub(crate) fn for_each_within<F: FnMut(usize, usize)>(&self, q: usize, r: f64, mut f: F) {
        self.visit(q, r, |slot, p, d| {
            if d < r {
                f(slot, p);
            }
            true
        });
    }

    /// True when some indexed point is within distance `< r` of `q`.
    pub(crate) fn any_within(&self, q: usize, r: f64) -> bool {
        let mut hit = false;
        self.visit(q, r, |_, _, d| {
            if d < r {
                hit = true;
            }
            !hit
        });
        hit
    }

    /// Nearest indexed point among those within `r`, ties to the lowest slot.
    pub(crate) fn nearest_within(&self, q: usize, r: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.visit(q, r, |slot, _, d| {
            if d < r {
                match best {
                    Some((s, bd)) if bd < d || (bd == d && s < slot) => {}
                    _ => best = Some((slot, d)),
                }
            }
            true
        });
        best
    }

    // Visits candidates (slot, point, distance); stop early when `f` returns false.
    fn visit<F: FnMut(usize, usize, f64) -> bool>(&self, q: usize, r: f64, mut f: F) {
        let space = self.space;
        match &self.grid {
            None => {
                for (slot, &p) in self.items.iter().enumerate() {
                    if !f(slot, p, space.dist(q, p)) {
                        return;
                    }
                }
            }
            Some(g) => {
                let qp = space.point(q);
                let reach = ceil(space.base_radius(r) / g.cell).min(1e15) as isize;
                let dim = qp.len();
                let mut lo = [0isize; 2];
                let mut hi = [0isize; 2];
                for c in 0..dim {
                    let k = g.coord(qp, c);
                    lo[c] = k.saturating_sub(reach).max(0);
                    hi[c] = k.saturating_add(reach).min(g.dims[c] as isize - 1);
                    if lo[c] > hi[c] {
                        return;
                    }
                }
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let b = x as usize + y as usize * g.dims[0];
                        for &slot in &g.buckets[b] {
                            let p = self.items[slot as usize];
                            if !f(slot as usize, p, space.dist(q, p)) {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }
}
