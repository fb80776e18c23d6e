// Cutting planes for p > 1. Each restricted problem over the active paths is
// solved by a log barrier interior point method; its multipliers give a lower
// bound on the modulus and the separation step an upper bound.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{path_length, separate, LocalSolution, PathFamily, SolverOptions, Status};
use crate::math::{ln, powf, sqrt};

const MAX_CENTERINGS: usize = 40;
const MAX_NEWTON_STEPS: usize = 100;
const BARRIER_GROWTH: f64 = 20.0;

pub(super) fn solve(family: &PathFamily, p: f64, opts: &SolverOptions) -> LocalSolution {
    let n = family.graph().vertex_count();
    let tol = opts.tol;
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut keys: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut add = |path: Vec<usize>, paths: &mut Vec<Vec<usize>>| {
        let mut key = path.clone();
        key.sort_unstable();
        key.dedup();
        if keys.insert(key) {
            paths.push(path);
            true
        } else {
            false
        }
    };
    for path in separate(family, &vec![1.0; n], f64::INFINITY, opts.cuts_per_round).violated {
        add(path, &mut paths);
    }
    let mut gap_scale = 0.1;
    let mut lower: f64 = 0.0;
    let mut best = (f64::INFINITY, Vec::new());
    let mut iterations = 0;
    let mut status = Status::IterationCap;
    let mut mu = Vec::new();
    while iterations < opts.max_iter {
        iterations += 1;
        let (rho, m) = restricted(&paths, n, p, gap_scale * tol);
        mu = m;
        let vol: f64 = rho.iter().map(|&x| if x > 0.0 { powf(x, p) } else { 0.0 }).sum();
        lower = lower.max(dual_bound(&paths, &mu, n, p));
        let cuts = separate(family, &rho, 1.0 - tol / 4.0, opts.cuts_per_round);
        let len = cuts.length;
        if len > 0.0 {
            let upper = vol / powf(len, p);
            if upper < best.0 {
                best = (upper, rho.iter().map(|x| x / len).collect());
            }
            if len >= 1.0 - tol && best.0 - lower <= tol * best.0.max(1.0) {
                status = Status::Converged;
                break;
            }
        }
        let mut added = false;
        for path in cuts.violated {
            added |= add(path, &mut paths);
        }
        if !added {
            // every violated path is already active: the restricted solve was too loose
            if gap_scale < 1e-9 {
                status = Status::Converged;
                break;
            }
            gap_scale /= 10.0;
        }
    }
    let (value, rho) = best;
    let top = mu.iter().copied().fold(0.0, f64::max);
    let active = (0..paths.len())
        .filter(|&j| mu[j] > 1e-8 * top && (path_length(&rho, &paths[j]) - 1.0).abs() <= tol)
        .map(|j| paths[j].clone())
        .collect();
    LocalSolution { value, lower_bound: lower.min(value), rho, active, iterations, status, note: None }
}

// Lagrangian lower bound Σμ − (p−1)Σ(s_v/p)^{p/(p−1)} with s = Aᵀμ; valid for
// any nonnegative multipliers on any subfamily.
fn dual_bound(paths: &[Vec<usize>], mu: &[f64], n: usize, p: f64) -> f64 {
    let mut s = vec![0.0; n];
    for (path, &m) in paths.iter().zip(mu) {
        for &v in path {
            s[v] += m;
        }
    }
    let e = p / (p - 1.0);
    let cost: f64 = s.iter().map(|&x| if x > 0.0 { powf(x / p, e) } else { 0.0 }).sum();
    mu.iter().sum::<f64>() - (p - 1.0) * cost
}

// min Σρ^p subject to Σ_{v∈γ}ρ_v ≥ 1 for the given paths, by a log barrier
// method with damped Newton centering. Returns ρ on all n vertices and one
// multiplier per path. Stops once the barrier gap is below `rel_gap` times
// the objective.
fn restricted(paths: &[Vec<usize>], n: usize, p: f64, rel_gap: f64) -> (Vec<f64>, Vec<f64>) {
    let mut local = vec![usize::MAX; n];
    let mut verts = Vec::new();
    for path in paths {
        for &v in path {
            if local[v] == usize::MAX {
                local[v] = 0;
                verts.push(v);
            }
        }
    }
    verts.sort_unstable();
    for (i, &v) in verts.iter().enumerate() {
        local[v] = i;
    }
    let rows: Vec<Vec<usize>> = paths.iter().map(|path| path.iter().map(|&v| local[v]).collect()).collect();
    let k = verts.len();
    let m = rows.len();
    let mut through: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, row) in rows.iter().enumerate() {
        for &v in row {
            through[v].push(j);
        }
    }
    let sys = System { rows: &rows, through: &through, k, m };
    let objective = |x: &[f64]| x.iter().map(|&xi| powf(xi, p)).sum::<f64>();
    let barrier = |x: &[f64], w: &[f64], t: f64| {
        t * objective(x) - w.iter().map(|&wj| ln(wj)).sum::<f64>() - x.iter().map(|&xi| ln(xi)).sum::<f64>()
    };

    let mut x = vec![2.0; k];
    let mut w: Vec<f64> = sys.apply(&x).iter().map(|a| a - 1.0).collect();
    let count = (m + k) as f64;
    let mut t = count / objective(&x);
    for _ in 0..MAX_CENTERINGS {
        for _ in 0..MAX_NEWTON_STEPS {
            let inv_w: Vec<f64> = w.iter().map(|wj| 1.0 / wj).collect();
            let back = sys.apply_t(&inv_w);
            let grad: Vec<f64> = (0..k).map(|i| t * p * powf(x[i], p - 1.0) - back[i] - 1.0 / x[i]).collect();
            let d: Vec<f64> = (0..k).map(|i| t * p * (p - 1.0) * powf(x[i], p - 2.0) + 1.0 / (x[i] * x[i])).collect();
            let theta: Vec<f64> = inv_w.iter().map(|v| v * v).collect();
            let Some(factor) = sys.factor(&d, &theta) else { break };
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let dx = factor.solve(&sys, &rhs);
            let decrement = -dot(&grad, &dx);
            if !(decrement > 2e-10) {
                break;
            }
            let dw = sys.apply(&dx);
            let mut a = (0.99 * max_step(&[(&x, &dx), (&w, &dw)])).min(1.0);
            let start = barrier(&x, &w, t);
            let mut moved = false;
            for _ in 0..60 {
                let nx: Vec<f64> = (0..k).map(|i| x[i] + a * dx[i]).collect();
                let nw: Vec<f64> = (0..m).map(|j| w[j] + a * dw[j]).collect();
                if barrier(&nx, &nw, t) <= start - 0.25 * a * decrement {
                    x = nx;
                    w = nw;
                    moved = true;
                    break;
                }
                a *= 0.5;
            }
            if !moved {
                break;
            }
            // recompute slacks from x to stop drift
            w = sys.apply(&x).iter().map(|a| a - 1.0).collect();
        }
        if count / t <= rel_gap * objective(&x) {
            break;
        }
        t *= BARRIER_GROWTH;
    }
    let mu = w.iter().map(|wj| 1.0 / (t * wj)).collect();
    let mut rho = vec![0.0; n];
    for (i, &v) in verts.iter().enumerate() {
        rho[v] = x[i];
    }
    (rho, mu)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Largest step keeping every pair (value + α·delta) positive.
fn max_step(pairs: &[(&Vec<f64>, &Vec<f64>)]) -> f64 {
    let mut a = f64::INFINITY;
    for (val, delta) in pairs {
        for (v, d) in val.iter().zip(delta.iter()) {
            if *d < 0.0 {
                a = a.min(-v / d);
            }
        }
    }
    a
}

struct System<'a> {
    rows: &'a [Vec<usize>],
    through: &'a [Vec<usize>],
    k: usize,
    m: usize,
}

enum Factor {
    // Cholesky of D + AᵀΘA over vertices
    Primal(Vec<f64>),
    // Cholesky of Θ⁻¹ + AD⁻¹Aᵀ over paths, with D⁻¹
    Dual(Vec<f64>, Vec<f64>),
}

impl System<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&v| x[v]).sum()).collect()
    }

    fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (r, &yj) in self.rows.iter().zip(y) {
            for &v in r {
                out[v] += yj;
            }
        }
        out
    }

    fn factor(&self, d: &[f64], theta: &[f64]) -> Option<Factor> {
        if self.k <= self.m {
            let k = self.k;
            let mut h = vec![0.0; k * k];
            for i in 0..k {
                h[i * k + i] = d[i];
            }
            for (r, &t) in self.rows.iter().zip(theta) {
                for &a in r {
                    for &b in r {
                        h[a * k + b] += t;
                    }
                }
            }
            cholesky(&mut h, k).then_some(Factor::Primal(h))
        } else {
            let m = self.m;
            let dinv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
            let mut h = vec![0.0; m * m];
            for j in 0..m {
                h[j * m + j] = 1.0 / theta[j];
            }
            for (v, list) in self.through.iter().enumerate() {
                for &a in list {
                    for &b in list {
                        h[a * m + b] += dinv[v];
                    }
                }
            }
            cholesky(&mut h, m).then_some(Factor::Dual(h, dinv))
        }
    }
}

impl Factor {
    fn solve(&self, sys: &System, rhs: &[f64]) -> Vec<f64> {
        match self {
            Factor::Primal(l) => {
                let mut x = rhs.to_vec();
                substitute(l, &mut x, sys.k);
                x
            }
            Factor::Dual(l, dinv) => {
                let y: Vec<f64> = rhs.iter().zip(dinv).map(|(r, d)| r * d).collect();
                let mut z = sys.apply(&y);
                substitute(l, &mut z, sys.m);
                let back = sys.apply_t(&z);
                (0..sys.k).map(|i| y[i] - dinv[i] * back[i]).collect()
            }
        }
    }
}

// In-place lower Cholesky factor of a symmetric matrix, with a small diagonal
// shift when the matrix is numerically semidefinite.
fn cholesky(h: &mut [f64], n: usize) -> bool {
    let top = (0..n).map(|i| h[i * n + i]).fold(0.0, f64::max);
    let shift = 1e-14 * top.max(1e-300);
    for j in 0..n {
        let row_j = j * n;
        let mut d = h[row_j + j] + shift;
        for t in 0..j {
            d -= h[row_j + t] * h[row_j + t];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = sqrt(d);
        h[row_j + j] = d;
        for i in j + 1..n {
            let row_i = i * n;
            let mut s = h[row_i + j];
            for t in 0..j {
                s -= h[row_i + t] * h[row_j + t];
            }
            h[row_i + j] = s / d;
        }
    }
    true
}

fn substitute(l: &[f64], b: &mut [f64], n: usize) {
    for i in 0..n {
        let mut s = b[i];
        for t in 0..i {
            s -= l[i * n + t] * b[t];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for t in i + 1..n {
            s -= l[t * n + i] * b[t];
        }
        b[i] = s / l[i * n + i];
    }
}
