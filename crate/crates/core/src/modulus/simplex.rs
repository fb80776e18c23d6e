// p = 1 on separated-pair families: cutting planes whose restricted problem
// is the fractional path packing LP
//     max Σ μ_γ   s.t.  Σ_{γ ∋ v} μ_γ ≤ 1,  μ ≥ 0,
// solved by a dense tableau simplex with Bland's rule. The optimal prices of
// the vertex rows are the weights ρ.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{separate, LocalSolution, PathFamily, SolverOptions, Status};

const EPS: f64 = 1e-11;

/// Returns (value, multipliers, prices) for the packing LP on `n` vertices.
fn packing(paths: &[Vec<usize>], n: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let mut row_of = vec![usize::MAX; n];
    let mut rows = Vec::new();
    for path in paths {
        for &v in path {
            if row_of[v] == usize::MAX {
                row_of[v] = rows.len();
                rows.push(v);
            }
        }
    }
    let (m, k) = (rows.len(), paths.len());
    let cols = k + m;
    // tableau rows 0..m, objective row m; last column is the right-hand side
    let width = cols + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for (j, path) in paths.iter().enumerate() {
        for &v in path {
            t[row_of[v] * width + j] += 1.0;
        }
        t[m * width + j] = -1.0;
    }
    for r in 0..m {
        t[r * width + k + r] = 1.0;
        t[r * width + cols] = 1.0;
    }
    let mut basis: Vec<usize> = (k..cols).collect();
    while let Some(enter) = (0..cols).find(|&c| t[m * width + c] < -EPS) {
        let mut leave: Option<usize> = None;
        for r in 0..m {
            let a = t[r * width + enter];
            if a > EPS {
                let ratio = t[r * width + cols] / a;
                leave = match leave {
                    None => Some(r),
                    Some(l) => {
                        let best = t[l * width + cols] / t[l * width + enter];
                        if ratio < best - EPS || (ratio <= best + EPS && basis[r] < basis[l]) {
                            Some(r)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(l) = leave else { break };
        let pivot = t[l * width + enter];
        for c in 0..width {
            t[l * width + c] /= pivot;
        }
        for r in 0..=m {
            if r != l {
                let f = t[r * width + enter];
                if f != 0.0 {
                    for c in 0..width {
                        t[r * width + c] -= f * t[l * width + c];
                    }
                }
            }
        }
        basis[l] = enter;
    }
    let mut mu = vec![0.0; k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            mu[b] = t[r * width + cols];
        }
    }
    let mut rho = vec![0.0; n];
    for (r, &v) in rows.iter().enumerate() {
        rho[v] = t[m * width + k + r].max(0.0);
    }
    (t[m * width + cols], mu, rho)
}

pub(super) fn solve(family: &PathFamily, opts: &SolverOptions) -> LocalSolution {
    let n = family.graph().vertex_count();
    let tol = opts.tol;
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut keys = BTreeSet::new();
    let mut add = |paths: &mut Vec<Vec<usize>>, path: Vec<usize>| {
        let mut key = path.clone();
        key.sort_unstable();
        keys.insert(key) && {
            paths.push(path);
            true
        }
    };
    for path in separate(family, &vec![1.0; n], f64::INFINITY, opts.cuts_per_round).violated {
        add(&mut paths, path);
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (value, mu, rho) = packing(&paths, n);
        let cuts = separate(family, &rho, 1.0 - tol, opts.cuts_per_round);
        let mut added = false;
        for path in cuts.violated {
            added |= add(&mut paths, path);
        }
        if !added || iterations >= opts.max_iter {
            let len = cuts.length.max(f64::MIN_POSITIVE);
            let scale = if len < 1.0 { 1.0 / len } else { 1.0 };
            let rho: Vec<f64> = rho.iter().map(|x| x * scale).collect();
            let active = (0..paths.len()).filter(|&j| mu[j] > EPS).map(|j| paths[j].clone()).collect();
            return LocalSolution {
                value: value * scale,
                lower_bound: value,
                rho,
                active,
                iterations,
                status: if added { Status::IterationCap } else { Status::Converged },
                note: None,
            };
        }
    }
}
