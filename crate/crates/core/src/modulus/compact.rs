// Source-to-target families for p > 1 without enumerating paths. A weight ρ
// is admissible exactly when some potential φ with φ = 1 on targets satisfies
// φ_v ≤ φ_u + ρ_v along every edge u → v and φ_s ≤ ρ_s at sources, so the
// modulus is a convex program in (φ, ρ) with one constraint per edge. It is
// solved by a log barrier method with sparse Newton steps; the barrier
// multipliers are a vertex-capacitated flow whose Lagrangian bound certifies
// the gap.

use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Side};

use super::{separate, LocalSolution, PathFamily, SolverOptions, Status, Terminals};
use crate::math::{ln, powf};

const NONE: u32 = u32::MAX;
const BARRIER_GROWTH: f64 = 16.0;
const CENTERED: f64 = 1e-8;
const MAX_CENTERING_STEPS: usize = 60;

// slack = x[rho] + x[from] − x[to] + offset; `from`/`to` may be absent
struct Constraint {
    rho: u32,
    from: u32,
    to: u32,
    offset: f64,
}

struct Program {
    n: usize,
    n_phi: usize,
    cons: Vec<Constraint>,
    // positions in the Hessian value array: diagonal per variable, then six per constraint
    diag: Vec<usize>,
    slots: Vec<[usize; 6]>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl Program {
    fn new(family: &PathFamily) -> Self {
        let Terminals::SourceTarget { source, target } = family.terminals() else { unreachable!() };
        let g = family.graph();
        let n = g.vertex_count();
        let mut phi = vec![NONE; n];
        let mut n_phi = 0;
        for v in 0..n {
            if !target[v] {
                phi[v] = n_phi as u32;
                n_phi += 1;
            }
        }
        let rho = |v: usize| (n_phi + v) as u32;
        let mut cons = Vec::new();
        for v in 0..n {
            if source[v] {
                let (to, offset) = if target[v] { (NONE, -1.0) } else { (phi[v], 0.0) };
                cons.push(Constraint { rho: rho(v), from: NONE, to, offset });
                continue;
            }
            // minimal paths never re-enter a source or leave a target
            for &u in g.neighbors(v) {
                let u = u as usize;
                if target[u] {
                    continue;
                }
                let (to, offset) = if target[v] { (NONE, -1.0) } else { (phi[v], 0.0) };
                cons.push(Constraint { rho: rho(v), from: phi[u], to, offset });
            }
        }
        let vars = n_phi + n;
        let mut pairs: Vec<(usize, usize)> = (0..vars).map(|i| (i, i)).collect();
        for c in &cons {
            let ids = [c.rho, c.from, c.to];
            for a in 0..3 {
                for b in 0..3 {
                    if ids[a] != NONE && ids[b] != NONE && ids[a] >= ids[b] {
                        pairs.push((ids[b] as usize, ids[a] as usize));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut col_ptr = vec![0; vars + 1];
        for &(c, _) in &pairs {
            col_ptr[c + 1] += 1;
        }
        for c in 0..vars {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx: Vec<usize> = pairs.iter().map(|&(_, r)| r).collect();
        let find = |r: u32, c: u32| -> usize {
            let (r, c) = if r >= c { (r as usize, c as usize) } else { (c as usize, r as usize) };
            col_ptr[c] + row_idx[col_ptr[c]..col_ptr[c + 1]].binary_search(&r).unwrap()
        };
        let diag = (0..vars as u32).map(|i| find(i, i)).collect();
        let slots = cons
            .iter()
            .map(|c| {
                let ids = [c.rho, c.from, c.to];
                let mut s = [usize::MAX; 6];
                let mut k = 0;
                for a in 0..3 {
                    for b in a..3 {
                        if ids[a] != NONE && ids[b] != NONE {
                            s[k] = find(ids[a], ids[b]);
                        }
                        k += 1;
                    }
                }
                s
            })
            .collect();
        Program { n, n_phi, cons, diag, slots, col_ptr, row_idx }
    }

    fn vars(&self) -> usize {
        self.n_phi + self.n
    }

    fn slack(&self, c: &Constraint, x: &[f64]) -> f64 {
        let mut s = x[c.rho as usize] + c.offset;
        if c.from != NONE {
            s += x[c.from as usize];
        }
        if c.to != NONE {
            s -= x[c.to as usize];
        }
        s
    }

    // +∞ outside the domain
    fn barrier(&self, x: &[f64], t: f64, p: f64) -> f64 {
        let mut total = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if i < self.n_phi {
                if !(xi > 0.0 && xi < 1.0) {
                    return f64::INFINITY;
                }
                total -= ln(xi) + ln(1.0 - xi);
            } else {
                if !(xi > 0.0) {
                    return f64::INFINITY;
                }
                total += t * powf(xi, p) - ln(xi);
            }
        }
        for c in &self.cons {
            let s = self.slack(c, x);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            total -= ln(s);
        }
        total
    }

    // Lagrangian lower bound at multipliers c/(t·slack), minimizing over
    // ρ ≥ 0 and φ in [0, 1]; the bound is concave in the scale c, which is
    // chosen optimally.
    fn dual_bound(&self, x: &[f64], t: f64, p: f64) -> f64 {
        let mut sigma = vec![0.0; self.n];
        let mut coef = vec![0.0; self.n_phi];
        let mut linear = 0.0;
        for c in &self.cons {
            let mu = 1.0 / (t * self.slack(c, x));
            sigma[c.rho as usize - self.n_phi] += mu;
            linear -= mu * c.offset;
            if c.from != NONE {
                coef[c.from as usize] -= mu;
            }
            if c.to != NONE {
                coef[c.to as usize] += mu;
            }
        }
        linear += coef.iter().map(|&c| c.min(0.0)).sum::<f64>();
        let e = p / (p - 1.0);
        let cost: f64 = sigma.iter().filter(|&&s| s > 0.0).map(|&s| (p - 1.0) * powf(s / p, e)).sum();
        if !(linear > 0.0) || !(cost > 0.0) {
            return 0.0;
        }
        let scale = powf(linear / (e * cost), 1.0 / (e - 1.0));
        scale * linear - powf(scale, e) * cost
    }
}

pub(super) fn solve(family: &PathFamily, p: f64, opts: &SolverOptions) -> LocalSolution {
    let prog = Program::new(family);
    let vars = prog.vars();
    let n_phi = prog.n_phi;
    let symbolic = SymbolicSparseColMat::new_checked(vars, vars, prog.col_ptr.clone(), None, prog.row_idx.clone());
    let analysis = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower).ok();
    let mut values = vec![0.0; prog.row_idx.len()];

    let mut x: Vec<f64> = (0..vars).map(|i| if i < n_phi { 0.5 } else { 2.0 }).collect();
    let count = (prog.cons.len() + n_phi * 2 + prog.n) as f64;
    let f0: f64 = x[n_phi..].iter().map(|&r| powf(r, p)).sum();
    let mut t = count / f0;
    let mut grad = vec![0.0; vars];
    let mut inv = vec![0.0; prog.cons.len()];
    let mut best = (f64::INFINITY, vec![0.0; prog.n]);
    let mut lower: f64 = 0.0;
    let mut status = Status::IterationCap;
    let mut iterations = 0;
    let mut progress = (0.0, f64::INFINITY);
    let mut idle = 0;
    'outer: while iterations < opts.max_iter {
        // centering
        for _ in 0..MAX_CENTERING_STEPS {
            iterations += 1;
            for v in values.iter_mut() {
                *v = 0.0;
            }
            for (i, &xi) in x.iter().enumerate() {
                if i < n_phi {
                    grad[i] = -1.0 / xi + 1.0 / (1.0 - xi);
                    values[prog.diag[i]] = 1.0 / (xi * xi) + 1.0 / ((1.0 - xi) * (1.0 - xi));
                } else {
                    grad[i] = t * p * powf(xi, p - 1.0) - 1.0 / xi;
                    values[prog.diag[i]] = t * p * (p - 1.0) * powf(xi, p - 2.0) + 1.0 / (xi * xi);
                }
            }
            for (k, c) in prog.cons.iter().enumerate() {
                inv[k] = 1.0 / prog.slack(c, &x);
            }
            for (k, c) in prog.cons.iter().enumerate() {
                let w = inv[k];
                let h = w * w;
                let coef = [(c.rho, 1.0), (c.from, 1.0), (c.to, -1.0)];
                for &(id, sign) in &coef {
                    if id != NONE {
                        grad[id as usize] -= w * sign;
                    }
                }
                let mut slot = 0;
                for a in 0..3 {
                    for b in a..3 {
                        let pos = prog.slots[k][slot];
                        slot += 1;
                        if pos != usize::MAX {
                            // both orderings of an off-diagonal pair land on the same lower entry
                            values[pos] += h * coef[a].1 * coef[b].1;
                        }
                    }
                }
            }
            let Some(step) = newton_step(analysis.as_ref(), symbolic.as_ref(), &values, &grad, &prog.diag) else {
                break 'outer;
            };
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
            if !(decrement > 2.0 * CENTERED) {
                break;
            }
            let start = prog.barrier(&x, t, p);
            // rounding in the barrier value swamps the remaining decrease
            if decrement <= 1e-15 * start.abs() {
                break;
            }
            let mut a = 1.0;
            let mut moved = false;
            let mut trial = vec![0.0; vars];
            for _ in 0..80 {
                for i in 0..vars {
                    trial[i] = x[i] + a * step[i];
                }
                let val = prog.barrier(&trial, t, p);
                if val <= start - 0.25 * a * decrement {
                    moved = true;
                    break;
                }
                a *= 0.5;
            }
            if !moved {
                break;
            }
            core::mem::swap(&mut x, &mut trial);
            if iterations >= opts.max_iter {
                break 'outer;
            }
        }
        let rho = &x[n_phi..];
        lower = lower.max(prog.dual_bound(&x, t, p));
        let len = separate(family, rho, 0.0, 1).length;
        if len > 0.0 && len.is_finite() {
            let vol: f64 = rho.iter().map(|&r| powf(r, p)).sum();
            let upper = vol / powf(len, p);
            if upper < best.0 {
                best = (upper, rho.iter().map(|r| r / len).collect());
            }
        }
        let scale = best.0.max(1.0);
        if best.0 - lower <= opts.tol * scale {
            status = Status::Converged;
            break;
        }
        if progress.0 - lower > -1e-3 * opts.tol * scale && best.0 - progress.1 > -1e-3 * opts.tol * scale {
            idle += 1;
            if idle == 2 {
                status = Status::Stalled;
                break;
            }
        } else {
            idle = 0;
        }
        progress = (lower, best.0);
        t *= BARRIER_GROWTH;
    }
    let (value, rho) = best;
    let active = separate(family, &rho, 1.0 + opts.tol, opts.cuts_per_round).violated;
    LocalSolution { value, lower_bound: lower.min(value), rho, active, iterations, status, note: None }
}

// Solves H·d = −g, shifting the diagonal when the factorization fails.
fn newton_step(
    analysis: Option<&SymbolicLlt<usize>>,
    symbolic: SymbolicSparseColMatRef<'_, usize>,
    values: &[f64],
    grad: &[f64],
    diag: &[usize],
) -> Option<Vec<f64>> {
    let analysis = analysis?;
    let mut shifted = values.to_vec();
    let top = diag.iter().map(|&d| values[d]).fold(0.0, f64::max);
    let mut shift = 0.0;
    for _ in 0..8 {
        let mat = SparseColMatRef::new(symbolic, &shifted);
        if let Ok(llt) = Llt::try_new_with_symbolic(analysis.clone(), mat, Side::Lower) {
            let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let n = rhs.len();
            llt.solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(&mut rhs, n, 1));
            if rhs.iter().all(|v| v.is_finite()) {
                return Some(rhs);
            }
        }
        shift = if shift == 0.0 { 1e-12 * top } else { shift * 100.0 };
        shifted.copy_from_slice(values);
        for &d in diag {
            shifted[d] += shift;
        }
    }
    None
}
