use confdim_core::graph::Graph;
use confdim_core::modulus::{brute_force_modulus, shortest_admissibility, solve_modulus, PathFamily, SolverOptions, WeightFunction};
use proptest::prelude::*;

/// Connected graph: random tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=10).prop_flat_map(|n| {
        let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n), 0..=n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, ix)| (i + 1, ix.index(i + 1))).collect();
            edges.extend(extra.into_iter().filter(|(u, v)| u != v));
            (n, edges)
        })
    })
}

fn family() -> impl Strategy<Value = PathFamily> {
    connected_graph().prop_flat_map(|(n, edges)| {
        let sets = (proptest::collection::vec(0..n, 1..=3), proptest::collection::vec(0..n, 1..=3));
        (Just(n), Just(edges), sets).prop_map(|(n, edges, (s, t))| PathFamily::from_sets(Graph::from_edges(n, &edges), &s, &t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, rng_seed: proptest::test_runner::RngSeed::Fixed(20240611), ..ProptestConfig::default() })]

    #[test]
    fn solver_matches_oracle(fam in family()) {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let want = brute_force_modulus(&fam, p).unwrap();
            let got = solve_modulus(&fam, p, &SolverOptions::default()).unwrap();
            prop_assert!((got.value - want).abs() <= 1e-4 * want.max(1.0), "p={} solver {} oracle {}", p, got.value, want);
        }
    }

    #[test]
    fn certificate_is_admissible(fam in family(), p in 1.0f64..3.5) {
        let tol = 1e-6;
        let r = solve_modulus(&fam, p, &SolverOptions { tol, ..SolverOptions::default() }).unwrap();
        let a = shortest_admissibility(&r.weights, &fam).unwrap();
        prop_assert!(a.length >= 1.0 - tol || fam.is_empty());
        prop_assert!(r.weights.values.iter().all(|&x| (0.0..=1.0 + tol).contains(&x)));
        prop_assert!((r.value - r.weights.volume(p)).abs() <= r.dual_gap + 1e-9);
    }

    #[test]
    fn monotone_in_p(fam in family(), p in 1.0f64..3.0, dp in 0.0f64..1.5) {
        let tol = 1e-6;
        let o = SolverOptions { tol, ..SolverOptions::default() };
        let lo = solve_modulus(&fam, p, &o).unwrap().value;
        let hi = solve_modulus(&fam, p + dp, &o).unwrap().value;
        prop_assert!(lo >= hi - 10.0 * tol * lo.max(1.0), "{} < {}", lo, hi);
    }

    #[test]
    fn scaling_feasible_weights(fam in family(), p in 1.0f64..3.0, c in 1.0f64..4.0) {
        let r = solve_modulus(&fam, p, &SolverOptions::default()).unwrap();
        let scaled: WeightFunction = r.weights.scaled(c);
        let a = shortest_admissibility(&scaled, &fam).unwrap();
        prop_assert!(a.length >= 1.0 - 1e-6 || fam.is_empty());
        let (v0, v1) = (r.weights.volume(p), scaled.volume(p));
        prop_assert!((v1 - c.powf(p) * v0).abs() <= 1e-9 * v1.max(1.0));
    }
}
