use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::graph::Graph;

fn path_graph(n: usize) -> Graph {
    Graph::from_edges(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
}

fn disjoint_paths(k: usize, n: usize) -> PathFamily {
    let mut edges = Vec::new();
    for c in 0..k {
        for i in 1..n {
            edges.push((c * n + i - 1, c * n + i));
        }
    }
    let g = Graph::from_edges(k * n, &edges);
    let s: Vec<usize> = (0..k).map(|c| c * n).collect();
    let t: Vec<usize> = (0..k).map(|c| c * n + n - 1).collect();
    PathFamily::from_sets(g, &s, &t)
}

fn grid(w: usize, h: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                edges.push((v, v + 1));
            }
            if r + 1 < h {
                edges.push((v, v + w));
            }
        }
    }
    Graph::from_edges(w * h, &edges)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn single_path_uniform_weights() {
    let fam = PathFamily::from_sets(path_graph(4), &[0], &[3]);
    let w = WeightFunction { level: 0, values: vec![0.25; 4] };
    let a = shortest_admissibility(&w, &fam).unwrap();
    assert!((a.length - 1.0).abs() < 1e-15);
    assert_eq!(a.witness.unwrap(), vec![0, 1, 2, 3]);
    let r = solve_modulus(&fam, 2.0, &opts()).unwrap();
    assert!((r.value - 0.25).abs() < 1e-6, "{}", r.value);
    for &x in &r.weights.values {
        assert!((x - 0.25).abs() < 1e-5);
    }
}

#[test]
fn zero_weights_and_grid_lengths() {
    let fam = PathFamily::from_sets(grid(3, 3), &[0], &[8]);
    let zero = WeightFunction::zeros(0, 9);
    assert_eq!(shortest_admissibility(&zero, &fam).unwrap().length, 0.0);
    let ones = WeightFunction { level: 0, values: vec![1.0; 9] };
    let a = shortest_admissibility(&ones, &fam).unwrap();
    assert_eq!(a.length, 5.0);
    assert_eq!(a.witness.unwrap().len(), 5);
    let wrong = WeightFunction::zeros(1, 9);
    assert!(matches!(shortest_admissibility(&wrong, &fam), Err(Error::Argument { .. })));
}

#[test]
fn disconnected_family_is_empty() {
    let g = Graph::from_edges(4, &[(0, 1), (2, 3)]);
    let fam = PathFamily::from_sets(g, &[0], &[3]);
    assert!(fam.is_empty());
    let a = shortest_admissibility(&WeightFunction::zeros(0, 4), &fam).unwrap();
    assert!(a.length.is_infinite() && a.witness.is_none());
    for p in [0.5, 1.0, 2.0] {
        let r = solve_modulus(&fam, p, &opts()).unwrap();
        assert_eq!(r.status, Status::EmptyFamily);
        assert_eq!(r.value, 0.0);
    }
    assert_eq!(brute_force_modulus(&fam, 2.0).unwrap(), 0.0);
}

#[test]
fn closed_forms() {
    for n in 2..=8 {
        for p in [1.5, 2.0, 3.0] {
            let want = powf(n as f64, 1.0 - p);
            let r = solve_modulus(&disjoint_paths(1, n), p, &opts()).unwrap();
            assert!((r.value - want).abs() < 1e-6, "n={n} p={p} got {}", r.value);
            let r = solve_modulus(&disjoint_paths(3, n), p, &opts()).unwrap();
            assert!((r.value - 3.0 * want).abs() < 1e-6, "k=3 n={n} p={p} got {}", r.value);
        }
    }
    let r = solve_modulus(&disjoint_paths(3, 4), 2.0, &opts()).unwrap();
    assert!((r.value - 0.75).abs() < 1e-6);
}

#[test]
fn oracle_examples() {
    let edge = PathFamily::from_sets(path_graph(2), &[0], &[1]);
    assert!((brute_force_modulus(&edge, 2.0).unwrap() - 0.5).abs() < 1e-8);
    let three = PathFamily::from_sets(path_graph(3), &[0], &[2]);
    assert!((brute_force_modulus(&three, 3.0).unwrap() - 1.0 / 9.0).abs() < 1e-8);
    let big = PathFamily::from_sets(path_graph(13), &[0], &[12]);
    assert!(matches!(brute_force_modulus(&big, 2.0), Err(Error::Argument { .. })));
}

#[test]
fn grid_side_to_side_matches_oracle() {
    let g = grid(3, 3);
    let fam = PathFamily::from_sets(g, &[0, 3, 6], &[2, 5, 8]);
    for p in [1.0, 1.5, 2.0, 3.0] {
        let want = brute_force_modulus(&fam, p).unwrap();
        let got = solve_modulus(&fam, p, &opts()).unwrap();
        assert!((want - got.value).abs() <= 1e-4 * want.max(1.0), "p={p}: {want} vs {}", got.value);
    }
    // three disjoint rows of three vertices: 3 · 3^{1-p}
    let got = solve_modulus(&fam, 2.0, &opts()).unwrap();
    assert!((got.value - 1.0).abs() < 1e-5);
}

#[test]
fn source_equal_target_forces_unit_weight() {
    let fam = PathFamily::from_sets(path_graph(3), &[1], &[1, 2]);
    let r = solve_modulus(&fam, 2.0, &opts()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-6);
    assert!((brute_force_modulus(&fam, 2.0).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn p_below_one_reports_dichotomy() {
    let fam = PathFamily::from_sets(grid(3, 3), &[0, 3, 6], &[2, 5, 8]);
    let r = solve_modulus(&fam, 0.5, &opts()).unwrap();
    assert!(r.value >= 1.0);
    assert!(r.note.is_some());
    assert!(matches!(solve_modulus(&fam, 0.0, &opts()), Err(Error::Argument { .. })));
}

#[test]
fn separated_family_matches_oracle() {
    let g = grid(3, 3);
    let coords: Vec<(f64, f64)> = (0..9).map(|v| ((v % 3) as f64, (v / 3) as f64)).collect();
    let fam = PathFamily::from_separation(g, |u, v| {
        let (a, b) = (coords[u], coords[v]);
        (a.0 - b.0).abs().max((a.1 - b.1).abs()) >= 2.0
    });
    for p in [1.0, 1.5, 2.0, 3.0] {
        let want = brute_force_modulus(&fam, p).unwrap();
        let got = solve_modulus(&fam, p, &opts()).unwrap();
        assert!((want - got.value).abs() <= 1e-4 * want.max(1.0), "p={p}: {want} vs {}", got.value);
        assert_eq!(got.status, Status::Converged);
    }
}

#[test]
fn certificate_and_active_paths() {
    let fam = PathFamily::from_sets(grid(4, 3), &[0, 4, 8], &[3, 7, 11]);
    let tol = 1e-6;
    let r = solve_modulus(&fam, 1.7, &opts()).unwrap();
    assert_eq!(r.status, Status::Converged);
    let a = shortest_admissibility(&r.weights, &fam).unwrap();
    assert!(a.length >= 1.0 - tol);
    assert!((r.value - r.weights.volume(1.7)).abs() <= r.dual_gap + 1e-9);
    assert!(!r.active_paths.is_empty());
    for path in &r.active_paths {
        let l: f64 = path.iter().map(|&v| r.weights.values[v]).sum();
        assert!(l >= 1.0 - tol && l <= 1.0 + 1e-3, "{l}");
    }
}
