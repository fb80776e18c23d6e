use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Levels;
use crate::covering::Genealogy;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::math::powf;
use crate::modulus::{solve_modulus, PathFamily, SolverOptions, WeightFunction};
use crate::nerve::NerveGraph;
use crate::Executor;

/// Slack on the Harnack ratio test so that values placed exactly at ratio
/// `K` are not re-oriented on a second pass.
const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub sigma: Vec<f64>,
    /// Largest number of balls whose weights are positive at one vertex.
    pub overlap: usize,
}

/// Pointwise maximum of per-ball weights on one level.
pub fn merge_optimal_sigma(size: usize, level: usize, weights: &[WeightFunction]) -> Result<Merged> {
    let mut merged = Merged { sigma: vec![0.0; size], overlap: 0 };
    let mut count = vec![0usize; size];
    fold_weights(&mut merged.sigma, &mut count, level, weights)?;
    merged.overlap = count.into_iter().max().unwrap_or(0);
    Ok(merged)
}

fn fold_weights(sigma: &mut [f64], count: &mut [usize], level: usize, weights: &[WeightFunction]) -> Result<()> {
    for w in weights {
        if w.level != level || w.values.len() != sigma.len() {
            return Err(Error::Argument {
                op: "gauge_builder::merge_optimal_sigma",
                msg: format!("weight on level {} with {} values, expected level {level} with {}", w.level, w.values.len(), sigma.len()),
            });
        }
        for (j, &v) in w.values.iter().enumerate() {
            if v > 0.0 {
                count[j] += 1;
                sigma[j] = sigma[j].max(v);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaStage {
    pub values: Levels,
    /// Overlap constant per level.
    pub overlap: Vec<usize>,
}

/// `σ_n` on every level `n ≥ 1`: merged optimal weights of `Γ_{1,L}(A)` over
/// the elements `A` of level `n − 1`.
pub fn optimal_sigma<E: Executor>(h: &Hierarchy, p: f64, l: f64, opts: &SolverOptions, exec: &E) -> Result<SigmaStage> {
    const CHUNK: usize = 64;
    let mut values = vec![vec![0.0]];
    let mut overlap = vec![0];
    for n in 1..=h.n_max() {
        let size = h.covering.level(n).len();
        let mut sigma = vec![0.0; size];
        let mut count = vec![0usize; size];
        let parents: Vec<usize> = (0..h.covering.level(n - 1).len()).collect();
        for chunk in parents.chunks(CHUNK) {
            let weights = exec.map(chunk.to_vec(), |a| -> Result<WeightFunction> {
                let family = PathFamily::annulus(h, n - 1, a, 1, l)?;
                Ok(solve_modulus(&family, p, opts)?.weights)
            });
            let weights = weights.into_iter().collect::<Result<Vec<_>>>()?;
            fold_weights(&mut sigma, &mut count, n, &weights)?;
        }
        values.push(sigma);
        overlap.push(count.into_iter().max().unwrap_or(0));
    }
    Ok(SigmaStage { values, overlap })
}

/// Largest `Σ_{T(B)} f^p` over parents `B` of level `n − 1`, per level `n`.
pub fn child_sums(f: &Levels, g: &Genealogy, p: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    for n in 1..f.len() {
        let best = g.children[n - 1]
            .iter()
            .map(|kids| kids.iter().map(|&c| pow_pos(f[n][c as usize], p)).sum::<f64>())
            .fold(0.0, f64::max);
        out.push(best);
    }
    out
}

/// Scales each level so that no child set carries more than `eta0` of
/// `σ^p`; returns the scaled weights and the factor per level.
pub fn attenuate(sigma: &Levels, g: &Genealogy, p: f64, eta0: f64) -> (Levels, Vec<f64>) {
    let sums = child_sums(sigma, g, p);
    let scales: Vec<f64> = sums.iter().map(|&s| if s > eta0 { powf(eta0 / s, 1.0 / p) } else { 1.0 }).collect();
    let values = sigma.iter().zip(&scales).map(|(row, &c)| row.iter().map(|v| v * c).collect()).collect();
    (values, scales)
}

/// `τ = (σ^p + η₋^p)^{1/p}` on levels `≥ 1`.
pub fn lift_to_tau(sigma: &Levels, p: f64, eta_minus: f64) -> Levels {
    let floor = powf(eta_minus, p);
    let mut tau: Levels = sigma.iter().map(|row| row.iter().map(|&s| powf(pow_pos(s, p) + floor, 1.0 / p)).collect()).collect();
    tau[0] = vec![1.0];
    tau
}

/// `τ̃(B) = 2 · max τ` over the vertices within two hops of `B` in `G_n`.
pub fn two_neighborhood_regularize(tau: &Levels, nerve: &NerveGraph) -> Levels {
    let mut out = vec![vec![1.0]];
    for (n, row) in tau.iter().enumerate().skip(1) {
        let g = nerve.level(n);
        let near: Vec<f64> = (0..row.len()).map(|v| g.neighbors(v).iter().fold(row[v], |m, &u| m.max(row[u as usize]))).collect();
        out.push((0..row.len()).map(|v| 2.0 * g.neighbors(v).iter().fold(near[v], |m, &u| m.max(near[u as usize]))).collect());
    }
    out
}

/// Potentials `π(B) = π(parent) · f(B)` with `π = 1` at the root.
pub fn potential_of(f: &Levels, g: &Genealogy) -> Levels {
    let mut pi = vec![vec![1.0]];
    for n in 1..f.len() {
        let row = f[n].iter().enumerate().map(|(j, &v)| pi[n - 1][g.parent[n][j] as usize] * v).collect();
        pi.push(row);
    }
    pi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackOutcome {
    pub rho_hat: Levels,
    /// Raised vertices per level.
    pub raised: Vec<usize>,
    /// Vertices where `ρ̂` exceeds the largest neighboring `τ̃`.
    pub above_neighbors: usize,
}

/// Raises the vertices whose provisional potential is more than a factor
/// `k` below a neighbor's, level by level from the root.
pub fn harnack_fix(tilde: &Levels, g: &Genealogy, nerve: &NerveGraph, k: f64) -> Result<HarnackOutcome> {
    const OP: &str = "gauge_builder::harnack_fix";
    if !(k >= 1.0) {
        return Err(Error::Parameter { op: OP, msg: format!("Harnack constant {k} below 1") });
    }
    let mut rho_hat: Levels = vec![vec![1.0]];
    let mut pi_prev = vec![1.0];
    let mut raised = vec![0];
    let mut above_neighbors = 0;
    for n in 1..tilde.len() {
        let row = &tilde[n];
        let graph = nerve.level(n);
        if let Some(j) = row.iter().position(|&t| !(t * k >= 1.0 && t <= 1.0)) {
            return Err(Error::Precondition {
                op: OP,
                msg: format!("parent-to-child ratio 1/τ̃ = {} at ({n}, {j}) outside [1, {k}]", 1.0 / row[j]),
            });
        }
        let parent = &g.parent[n];
        let pi1: Vec<f64> = (0..row.len()).map(|j| row[j] * pi_prev[parent[j] as usize]).collect();
        let beats = |u: usize, v: usize| pi1[u] > k * (1.0 + RATIO_SLACK) * pi1[v];
        let mut sink = vec![false; row.len()];
        for v in 0..row.len() {
            let has_in = graph.neighbors(v).iter().find(|&&u| beats(u as usize, v));
            let has_out = graph.neighbors(v).iter().find(|&&w| beats(v, w as usize));
            match (has_in, has_out) {
                (Some(&u), Some(&w)) => {
                    return Err(Error::Invariant {
                        op: OP,
                        msg: format!("oriented path of length two at level {n}: {u} -> {v} -> {w}"),
                    });
                }
                (Some(_), None) => sink[v] = true,
                _ => {}
            }
        }
        let mut fixed = row.clone();
        let mut pi_hat = pi1.clone();
        let mut count = 0;
        for v in 0..row.len() {
            if sink[v] {
                let top = graph.neighbors(v).iter().map(|&u| pi1[u as usize]).fold(0.0, f64::max);
                pi_hat[v] = top / k;
                fixed[v] = pi_hat[v] / pi_prev[parent[v] as usize];
                count += 1;
            }
        }
        for (u, v) in graph.edges() {
            let r = pi_hat[u] / pi_hat[v];
            if r > k * (1.0 + 1e-9) || r * k * (1.0 + 1e-9) < 1.0 {
                return Err(Error::Invariant {
                    op: OP,
                    msg: format!("neighbors ({n}, {u}) and ({n}, {v}) left at potential ratio {r} after the fix"),
                });
            }
        }
        for v in 0..row.len() {
            let top = graph.neighbors(v).iter().map(|&u| row[u as usize]).fold(row[v], f64::max);
            if fixed[v] > top * (1.0 + 1e-12) {
                above_neighbors += 1;
            }
        }
        raised.push(count);
        pi_prev = pi_hat;
        rho_hat.push(fixed);
    }
    Ok(HarnackOutcome { rho_hat, raised, above_neighbors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub rho: Levels,
    /// Center child per parent, per parent level.
    pub centers: Vec<Vec<usize>>,
    /// Parents whose center child has a neighbor outside the child set.
    pub fallbacks: usize,
    /// Values moved into `[η₋, η₊]`.
    pub clamped: usize,
    /// Smallest scale applied to a center child.
    pub min_omega: f64,
}

/// Rescales one child per parent so that `Σ_{T(B)} ρ^p = 1`.
pub fn normalize_h4(rho_hat: &Levels, h: &Hierarchy, p: f64, eta_minus: f64, eta_plus: f64) -> Result<Normalized> {
    const OP: &str = "gauge_builder::normalize_h4";
    let g = &h.genealogy;
    let mut rho = rho_hat.clone();
    let mut centers = Vec::new();
    let mut fallbacks = 0;
    let mut clamped = 0;
    let mut min_omega = f64::INFINITY;
    for n in 1..rho.len() {
        let graph = h.nerve.level(n);
        let mut row_centers = Vec::with_capacity(g.children[n - 1].len());
        for (b, kids) in g.children[n - 1].iter().enumerate() {
            if kids.is_empty() {
                row_centers.push(usize::MAX);
                continue;
            }
            let c = *kids
                .iter()
                .min_by(|&&x, &&y| {
                    h.center_dist(n - 1, b, n, x as usize).total_cmp(&h.center_dist(n - 1, b, n, y as usize)).then(x.cmp(&y))
                })
                .unwrap() as usize;
            if graph.neighbors(c).iter().any(|u| !kids.contains(u)) {
                fallbacks += 1;
            }
            let mut others = 0.0;
            for &x in kids {
                let x = x as usize;
                if x == c {
                    continue;
                }
                let v = rho[n][x];
                let w = v.clamp(eta_minus, eta_plus);
                if w != v {
                    clamped += 1;
                    rho[n][x] = w;
                }
                others += powf(w, p);
            }
            if others >= 1.0 {
                return Err(Error::Pipeline {
                    op: OP,
                    msg: format!("children of ({}, {b}) other than the center carry Σρ̂^p = {others} ≥ 1; use a smaller η₀", n - 1),
                });
            }
            let target = powf(1.0 - others, 1.0 / p);
            min_omega = min_omega.min(target / rho[n][c]);
            let w = target.clamp(eta_minus, eta_plus);
            if w != target {
                clamped += 1;
            }
            rho[n][c] = w;
            if target > eta_plus {
                let others: Vec<usize> = kids.iter().map(|&x| x as usize).filter(|&x| x != c).collect();
                refill(&mut rho[n], &others, 1.0 - powf(eta_plus, p), p, eta_plus);
            }
            row_centers.push(c);
        }
        centers.push(row_centers);
    }
    Ok(Normalized { rho, centers, fallbacks, clamped, min_omega })
}

/// Scales `row[others]` by a common factor, each capped at `cap`, so that
/// their `p`-th powers sum to `mass`. Leaves everything at the cap when
/// that is not enough.
fn refill(row: &mut [f64], others: &[usize], mass: f64, p: f64, cap: f64) {
    let cap_p = powf(cap, p);
    let mut capped = vec![false; others.len()];
    loop {
        let n_capped = capped.iter().filter(|&&c| c).count();
        let free: f64 = others.iter().zip(&capped).filter(|(_, &c)| !c).map(|(&x, _)| powf(row[x], p)).sum();
        let rest = mass - n_capped as f64 * cap_p;
        if free <= 0.0 || rest <= 0.0 {
            for (&x, _) in others.iter().zip(&capped).filter(|(_, &c)| c) {
                row[x] = cap;
            }
            return;
        }
        let s = powf(rest / free, 1.0 / p);
        let mut changed = false;
        for (i, &x) in others.iter().enumerate() {
            if !capped[i] && row[x] * s > cap {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed {
            for (i, &x) in others.iter().enumerate() {
                row[x] = if capped[i] { cap } else { row[x] * s };
            }
            return;
        }
    }
}

pub(crate) fn pow_pos(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        powf(x, p)
    } else {
        0.0
    }
}
