use confdim_core::exponent::{modulus_curve, Variant};
use confdim_core::gauge::{harnack_fix, potential_of};
use confdim_core::modulus::SolverOptions;
use confdim_core::{deepest_level, make_space, Generator, Hierarchy, Sequential};
use proptest::prelude::*;

fn generator() -> impl Strategy<Value = (Generator, usize)> {
    prop_oneof![
        (3usize..=7).prop_map(|d| (Generator::Interval, d)),
        (3usize..=7, 0.2f64..0.45).prop_map(|(d, r)| (Generator::Cantor { ratio: r }, d)),
        (2usize..=3).prop_map(|d| (Generator::CantorCrossInterval, d)),
        (2usize..=3).prop_map(|d| (Generator::SierpinskiCarpet, d)),
        (3usize..=5).prop_map(|d| (Generator::SierpinskiGasket, d)),
        (3usize..=6, 0.5f64..1.0).prop_map(|(d, e)| (Generator::Interval.snowflaked(e), d)),
    ]
}

fn hierarchy(gen: &Generator, depth: usize, a: f64) -> Hierarchy {
    let space = make_space(gen, depth).unwrap();
    let n_max = deepest_level(&space, a, 0);
    Hierarchy::build(space, a, 3.0, n_max).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

    #[test]
    fn levels_are_separated_covering_nets((gen, depth) in generator(), a in prop::sample::select(vec![2.0, 3.0])) {
        let h = hierarchy(&gen, depth, a);
        let s = &h.space;
        for n in 1..=h.n_max() {
            let r = h.radius(n);
            let centers = h.covering.level(n);
            for (i, &c) in centers.iter().enumerate() {
                for &d in &centers[i + 1..] {
                    prop_assert!(s.dist(c, d) >= r, "level {} centers {} {} at {}", n, c, d, s.dist(c, d));
                }
            }
            for x in 0..s.len() {
                prop_assert!(centers.iter().any(|&c| s.dist(x, c) <= r), "point {} uncovered at level {}", x, n);
            }
            for j in 0..centers.len() {
                let parent = h.genealogy.parent_of(n, j).unwrap();
                prop_assert!(h.genealogy.children_of(n - 1, parent).contains(&(j as u32)));
            }
        }
    }

    #[test]
    fn harnack_fix_bounds_neighbor_ratios(depth in 4usize..=7, k in 1.5f64..8.0, seed in any::<u64>()) {
        let h = hierarchy(&Generator::Interval, depth, 2.0);
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        // one-step ratios in [K^{-1/2}, 1] keep parent and child jumps within K
        let tilde: Vec<Vec<f64>> = h
            .covering
            .levels
            .iter()
            .enumerate()
            .map(|(n, l)| l.iter().map(|_| if n == 0 { 1.0 } else { k.powf(-0.5 * next()) }).collect())
            .collect();
        let out = harnack_fix(&tilde, &h.genealogy, &h.nerve, k).unwrap();
        let pi = potential_of(&out.rho_hat, &h.genealogy);
        for n in 1..pi.len() {
            for (u, v) in h.nerve.level(n).edges() {
                let r = pi[n][u] / pi[n][v];
                prop_assert!(r <= k * (1.0 + 1e-9) && r * k * (1.0 + 1e-9) >= 1.0);
            }
        }
        let again = harnack_fix(&out.rho_hat, &h.genealogy, &h.nerve, k).unwrap();
        prop_assert_eq!(again.rho_hat, out.rho_hat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]

    #[test]
    fn curves_decrease_in_annulus_ratio(p in 1.2f64..3.0, l in 2.0f64..3.0, dl in 0.0f64..1.5) {
        let h = hierarchy(&Generator::Interval, 6, 2.0);
        let o = SolverOptions::default();
        let base = [2, 3];
        let lo = modulus_curve(&h, p, l, (1, 2), &base, Variant::Standard, &o, &Sequential).unwrap();
        let hi = modulus_curve(&h, p, l + dl, (1, 2), &base, Variant::Standard, &o, &Sequential).unwrap();
        for (a, b) in lo.entries.iter().zip(&hi.entries) {
            prop_assert!(b.value <= a.value + 1e-5 * a.value.max(1.0), "k={} L={} {} vs L={} {}", a.k, l, a.value, l + dl, b.value);
        }
    }
}
