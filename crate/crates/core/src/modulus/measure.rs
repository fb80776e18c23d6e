use alloc::format;

use super::WeightFunction;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::math::powf;
use crate::spatial::PointIndex;

/// Weight `ρ(B') = (μ(B') / μ((L+1)·B))^{1/q}` on level `base_level + k` for
/// elements meeting the closure of `L·B`, with `μ` the normalized counting
/// measure on the space points.
pub fn measure_admissible_weight(h: &Hierarchy, base_level: usize, base: usize, k: usize, l: f64, q: f64) -> Result<WeightFunction> {
    const OP: &str = "modulus::measure_admissible_weight";
    if !(q > 0.0) {
        return Err(Error::Argument { op: OP, msg: format!("regularity exponent q = {q} must be positive") });
    }
    let level = base_level + k;
    if level > h.n_max() {
        return Err(Error::Precondition { op: OP, msg: format!("needs hierarchy depth {level}, built to {}", h.n_max()) });
    }
    let space = &h.space;
    let all: alloc::vec::Vec<usize> = (0..space.len()).collect();
    let kappa = h.kappa();
    let (r, rk) = (h.radius(base_level), h.radius(level));
    let x = h.covering.center(base_level, base);
    let big = space.ball(x, (l + 1.0) * kappa * r).len() as f64;
    let index = PointIndex::new(space, &all, rk);
    let centers = h.covering.level(level);
    let mut w = WeightFunction::zeros(level, centers.len());
    for (j, &y) in centers.iter().enumerate() {
        if space.dist(x, y) <= rk + l * kappa * r {
            let mut count = 0usize;
            index.for_each_within(y, rk, |_, _| count += 1);
            w.values[j] = powf(count as f64 / big, 1.0 / q);
        }
    }
    Ok(w)
}
