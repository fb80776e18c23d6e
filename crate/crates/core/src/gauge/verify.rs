use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metric::GaugeMetric;
use super::stages::pow_pos;
use super::Levels;
use crate::graph::vertex_weighted_search;
use crate::hierarchy::Hierarchy;
use crate::nerve::WITNESS_CAP;
use crate::rng;
use crate::spatial::PointIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub min: f64,
    pub max: f64,
    pub passed: bool,
    /// `(level, element)` outside the bounds.
    pub witnesses: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    /// Largest potential ratio across a horizontal edge.
    pub k0: f64,
    pub target: f64,
    pub passed: bool,
    /// `(level, u, v)` with ratio above the target.
    pub witnesses: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthCheck {
    pub pairs: usize,
    /// Level of the chains searched.
    pub level: usize,
    /// Largest `π(c_α(x, y)) / L_ρ(γ)` over the sampled pairs.
    pub k1: f64,
    /// Largest ratio of the ancestor-center-ancestor chain length to the
    /// shortest length found.
    pub candidate_excess: f64,
    pub capped_pairs: usize,
    pub passed: bool,
    /// Point pairs attaining the largest ratios.
    pub witnesses: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopingCheck {
    /// Largest `Σ_{D_n(B)} π^p / π(B)^p` or its inverse.
    pub k2: f64,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// `(level of B, B, level n)` with the largest errors.
    pub witnesses: Vec<(usize, usize, usize)>,
    /// `μ_n(X)` for every level.
    pub total_mass: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h1: BoundsCheck,
    pub h2: RatioCheck,
    pub h3: LengthCheck,
    pub h4: TelescopingCheck,
}

pub struct HypothesisInput<'a> {
    pub rho: &'a Levels,
    pub pi: &'a Levels,
    pub p: f64,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub k0_target: f64,
    pub alpha: f64,
    pub pairs: usize,
    pub seed: u64,
}

pub fn verify_hypotheses(h: &Hierarchy, metric: &GaugeMetric, input: &HypothesisInput) -> HypothesisReport {
    HypothesisReport {
        h1: check_bounds(input.rho, input.eta_minus, input.eta_plus),
        h2: check_ratios(h, input.pi, input.k0_target),
        h3: check_lengths(h, metric, input),
        h4: check_telescoping(h, input.pi, input.p, 1e-12),
    }
}

pub fn check_bounds(rho: &Levels, eta_minus: f64, eta_plus: f64) -> BoundsCheck {
    let mut out = BoundsCheck { eta_minus, eta_plus, min: f64::INFINITY, max: 0.0, passed: true, witnesses: Vec::new() };
    for (n, row) in rho.iter().enumerate().skip(1) {
        for (j, &v) in row.iter().enumerate() {
            out.min = out.min.min(v);
            out.max = out.max.max(v);
            if !(v >= eta_minus && v <= eta_plus) {
                out.passed = false;
                if out.witnesses.len() < WITNESS_CAP {
                    out.witnesses.push((n, j));
                }
            }
        }
    }
    out
}

pub fn check_ratios(h: &Hierarchy, pi: &Levels, target: f64) -> RatioCheck {
    let mut out = RatioCheck { k0: 1.0, target, passed: true, witnesses: Vec::new() };
    for (n, row) in pi.iter().enumerate() {
        for (u, v) in h.nerve.level(n).edges() {
            let r = (row[u] / row[v]).max(row[v] / row[u]);
            out.k0 = out.k0.max(r);
            if r > target * (1.0 + 1e-9) {
                out.passed = false;
                if out.witnesses.len() < WITNESS_CAP {
                    out.witnesses.push((n, u, v));
                }
            }
        }
    }
    out
}

/// Every `Σ_{B' ∈ D_n(B)} π(B')^p` against `π(B)^p`.
pub fn check_telescoping(h: &Hierarchy, pi: &Levels, p: f64, tolerance: f64) -> TelescopingCheck {
    let g = &h.genealogy;
    let mut k2: f64 = 1.0;
    let mut max_error: f64 = 0.0;
    let mut worst: Vec<(f64, (usize, usize, usize))> = Vec::new();
    let mut total_mass = Vec::with_capacity(pi.len());
    for n in 0..pi.len() {
        let mut mass: Vec<f64> = pi[n].iter().map(|&v| pow_pos(v, p)).collect();
        for m in (0..n).rev() {
            let mut up = vec![0.0; pi[m].len()];
            for (j, &w) in mass.iter().enumerate() {
                up[g.parent[m + 1][j] as usize] += w;
            }
            mass = up;
            for (b, &w) in mass.iter().enumerate() {
                let own = pow_pos(pi[m][b], p);
                let ratio = w / own;
                k2 = k2.max(ratio).max(1.0 / ratio);
                let err = (ratio - 1.0).abs();
                max_error = max_error.max(err);
                if err > tolerance {
                    worst.push((err, (m, b, n)));
                }
            }
        }
        total_mass.push(mass.iter().sum());
    }
    worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    worst.truncate(WITNESS_CAP);
    TelescopingCheck {
        k2,
        max_error,
        tolerance,
        passed: max_error <= tolerance,
        witnesses: worst.into_iter().map(|w| w.1).collect(),
        total_mass,
    }
}

/// Sampled lower bound on `π`-lengths of chains in `Z_d` joining the
/// deepest-level elements around two points.
fn check_lengths(h: &Hierarchy, metric: &GaugeMetric, input: &HypothesisInput) -> LengthCheck {
    let nerve = &h.nerve;
    let level = h.n_max();
    let z = nerve.z_graph();
    let mut weight = vec![0.0; z.vertex_count()];
    for (n, row) in input.pi.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            weight[nerve.vertex(n, j)] = v;
        }
    }
    let space = &h.space;
    let centers = h.covering.level(level);
    let reach = h.kappa() * h.radius(level);
    let index = PointIndex::new(space, centers, reach);
    let holders = |x: usize| {
        let mut list = Vec::new();
        index.for_each_within(x, reach, |slot, _| list.push(slot));
        list.sort_unstable();
        list
    };
    let nearest = |x: usize, list: &[usize]| {
        *list.iter().min_by(|&&a, &&b| space.dist(x, centers[a]).total_cmp(&space.dist(x, centers[b])).then(a.cmp(&b))).unwrap()
    };
    let mut out = LengthCheck {
        pairs: 0,
        level,
        k1: 0.0,
        candidate_excess: 1.0,
        capped_pairs: 0,
        passed: true,
        witnesses: Vec::new(),
    };
    let n_points = space.len();
    if n_points < 2 {
        return out;
    }
    let mut rng = rng::stream(input.seed, "gauge_builder::verify_h3");
    let mut ranked: Vec<(f64, (usize, usize))> = Vec::new();
    for _ in 0..input.pairs {
        let x = rng.random_range(0..n_points);
        let mut y = rng.random_range(0..n_points - 1);
        if y >= x {
            y += 1;
        }
        let Ok(c) = metric.center_in(&metric.row(x), y) else {
            out.passed = false;
            continue;
        };
        out.pairs += 1;
        if c.capped {
            out.capped_pairs += 1;
        }
        let (sx, sy) = (holders(x), holders(y));
        let mut is_target = vec![false; z.vertex_count()];
        for &t in &sy {
            is_target[nerve.vertex(level, t)] = true;
        }
        let mut found = f64::INFINITY;
        vertex_weighted_search(&z, &weight, sx.iter().map(|&s| nerve.vertex(level, s)), f64::INFINITY, |v, cost| {
            if is_target[v] {
                found = cost;
                true
            } else {
                false
            }
        });
        let ratio = c.pi / found;
        if !(ratio.is_finite()) {
            out.passed = false;
        }
        out.k1 = out.k1.max(ratio);
        ranked.push((ratio, (x, y)));
        // ancestors of the nearest elements up to the center level, joined through the center
        let chain = |start: usize| {
            let mut j = start;
            let mut sum = input.pi[level][j];
            for n in (c.level + 1..=level).rev() {
                j = h.genealogy.parent[n][j] as usize;
                if n - 1 > c.level {
                    sum += input.pi[n - 1][j];
                }
            }
            sum
        };
        let candidate = chain(nearest(x, &sx)) + chain(nearest(y, &sy)) + c.pi;
        out.candidate_excess = out.candidate_excess.max(candidate / found);
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    out.witnesses = ranked.into_iter().take(WITNESS_CAP.min(10)).map(|r| r.1).collect();
    out.passed &= out.k1.is_finite();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub level: usize,
    pub samples: usize,
    /// Samples whose ball held at least two atoms.
    pub used: usize,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub bound: f64,
    pub passed: bool,
    /// `μ_n(X)` for every level.
    pub total_mass: Vec<f64>,
    pub mass_within: bool,
    pub note: Option<String>,
}

/// `μ_n(B_θ(x, r)) / r^p` over sampled balls, with `μ_n` the atoms
/// `π(B)^p` at the deepest-level centers and `r = θ(x, z)` for random `z`.
pub fn verify_regularity(h: &Hierarchy, metric: &GaugeMetric, pi: &Levels, p: f64, samples: usize, seed: u64, bound: f64, k2: f64) -> RegularityReport {
    let level = h.n_max();
    let centers = h.covering.level(level);
    let atoms: Vec<f64> = pi[level].iter().map(|&v| pow_pos(v, p)).collect();
    let total_mass: Vec<f64> = pi.iter().map(|row| row.iter().map(|&v| pow_pos(v, p)).sum()).collect();
    let mass_within = total_mass.iter().all(|&m| m * k2 >= 1.0 - 1e-12 && m <= k2 * (1.0 + 1e-12));
    let mut out = RegularityReport {
        level,
        samples,
        used: 0,
        min: f64::INFINITY,
        max: 0.0,
        spread: f64::INFINITY,
        bound,
        passed: false,
        total_mass,
        mass_within,
        note: None,
    };
    if centers.len() < 2 {
        out.note = Some(String::from("fewer than two atoms at the deepest level"));
        return out;
    }
    let mut rng = rng::stream(seed, "gauge_builder::verify_regularity");
    for _ in 0..samples {
        let a = rng.random_range(0..centers.len());
        let mut b = rng.random_range(0..centers.len() - 1);
        if b >= a {
            b += 1;
        }
        let row = metric.row(centers[a]);
        let r = metric.theta_in(&row, centers[b]);
        let mut mass = 0.0;
        let mut count = 0;
        for (j, &c) in centers.iter().enumerate() {
            if metric.theta_in(&row, c) <= r {
                mass += atoms[j];
                count += 1;
            }
        }
        if count < 2 || !(r > 0.0) || !r.is_finite() {
            continue;
        }
        let ratio = mass / crate::math::powf(r, p);
        out.used += 1;
        out.min = out.min.min(ratio);
        out.max = out.max.max(ratio);
    }
    if out.used < 2 {
        out.note = Some(String::from("too few resolvable balls"));
        return out;
    }
    out.spread = out.max / out.min;
    out.passed = out.spread <= bound;
    out
}
