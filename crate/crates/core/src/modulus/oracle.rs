// Validation oracle: enumerate every minimal path explicitly and solve the
// fully constrained convex program with a log-barrier Newton method. Shares
// no code with the cutting-plane solvers beyond the family description.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{bit, PathFamily, Terminals};
use crate::error::{Error, Result};
use crate::math::{ln, powf};

pub const ORACLE_VERTEX_CAP: usize = 12;

fn minimal_paths(family: &PathFamily) -> Vec<u32> {
    let g = family.graph();
    let n = g.vertex_count();
    let (starts, done): (Vec<usize>, &dyn Fn(usize, usize) -> bool) = match family.terminals() {
        Terminals::SourceTarget { source, target } => ((0..n).filter(|&v| source[v]).collect(), &move |_, v| target[v]),
        Terminals::Separated { far } => ((0..n).collect(), &move |u, v| bit(&far[u], v)),
    };
    let mut masks = Vec::new();
    for &s in &starts {
        // explicit DFS stack of (vertex, next neighbor slot)
        let mut stack = vec![(s, 0usize)];
        let mut mask: u32 = 1 << s;
        if done(s, s) {
            masks.push(mask);
            continue;
        }
        while let Some(&mut (u, ref mut slot)) = stack.last_mut() {
            let nb = g.neighbors(u);
            if *slot >= nb.len() {
                mask &= !(1 << u);
                stack.pop();
                continue;
            }
            let v = nb[*slot] as usize;
            *slot += 1;
            if mask >> v & 1 == 1 {
                continue;
            }
            if done(s, v) {
                masks.push(mask | 1 << v);
            } else {
                mask |= 1 << v;
                stack.push((v, 0));
            }
        }
    }
    masks.sort_unstable();
    masks.dedup();
    // drop constraints implied by a subset constraint
    let minimal: Vec<u32> = masks.iter().copied().filter(|&m| !masks.iter().any(|&o| o != m && o & m == o)).collect();
    minimal
}

// Solves H x = b in place for a symmetric positive definite H.
fn cholesky_solve(h: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= h[j * n + k] * h[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = libm::sqrt(d);
        h[j * n + j] = d;
        for i in j + 1..n {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= h[i * n + k] * h[j * n + k];
            }
            h[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= h[i * n + k] * b[k];
        }
        b[i] = s / h[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= h[k * n + i] * b[k];
        }
        b[i] = s / h[i * n + i];
    }
    true
}

/// Exact modulus of a family on at most [`ORACLE_VERTEX_CAP`] vertices.
pub fn brute_force_modulus(family: &PathFamily, p: f64) -> Result<f64> {
    const OP: &str = "modulus::brute_force_modulus";
    let n = family.graph().vertex_count();
    if n > ORACLE_VERTEX_CAP {
        return Err(Error::Argument { op: OP, msg: format!("{n} vertices exceed the oracle cap {ORACLE_VERTEX_CAP}") });
    }
    if !(p >= 1.0) {
        return Err(Error::Argument { op: OP, msg: format!("oracle needs p >= 1, got {p}") });
    }
    let masks = minimal_paths(family);
    if masks.is_empty() {
        return Ok(0.0);
    }
    let used: u32 = masks.iter().fold(0, |a, &m| a | m);
    let vars: Vec<usize> = (0..n).filter(|&v| used >> v & 1 == 1).collect();
    let k = vars.len();
    let rows: Vec<Vec<usize>> = masks.iter().map(|&m| (0..k).filter(|&i| m >> vars[i] & 1 == 1).collect()).collect();
    let m = rows.len();

    let objective = |x: &[f64]| -> f64 { x.iter().map(|&v| powf(v, p)).sum() };
    let barrier = |x: &[f64], t: f64| -> f64 {
        let mut f = t * objective(x);
        for r in &rows {
            let s: f64 = r.iter().map(|&i| x[i]).sum::<f64>() - 1.0;
            if s <= 0.0 {
                return f64::INFINITY;
            }
            f -= ln(s);
        }
        for &v in x {
            if v <= 0.0 {
                return f64::INFINITY;
            }
            f -= ln(v);
        }
        f
    };

    let mut x = vec![2.0; k];
    let mut t = 1.0;
    let total = (m + k) as f64;
    loop {
        for _ in 0..200 {
            let mut grad = vec![0.0; k];
            let mut hess = vec![0.0; k * k];
            for i in 0..k {
                grad[i] = t * p * powf(x[i], p - 1.0) - 1.0 / x[i];
                hess[i * k + i] = t * p * (p - 1.0) * powf(x[i], p - 2.0) + 1.0 / (x[i] * x[i]);
            }
            for r in &rows {
                let s: f64 = r.iter().map(|&i| x[i]).sum::<f64>() - 1.0;
                for &i in r {
                    grad[i] -= 1.0 / s;
                    for &j in r {
                        hess[i * k + j] += 1.0 / (s * s);
                    }
                }
            }
            let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
            if !cholesky_solve(&mut hess, &mut step, k) {
                break;
            }
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let f0 = barrier(&x, t);
            let mut a = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(v, d)| v + a * d).collect();
                let f1 = barrier(&trial, t);
                if f1 <= f0 - 0.25 * a * decrement {
                    x = trial;
                    break;
                }
                a *= 0.5;
                if a < 1e-20 {
                    break;
                }
            }
            if a < 1e-20 {
                break;
            }
        }
        if total / t < 1e-11 * objective(&x).max(1.0) {
            break;
        }
        t *= 8.0;
    }
    Ok(objective(&x))
}
