mod common;

use common::{domain_formula_violations, random_partial_map as random_map};
use dynsys::germ::{compose_partial, germ_equal, Germ, OpenSet1D, PartialMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn composite_domain_formula(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_map(&mut rng), random_map(&mut rng));
        let points: Vec<f64> = (0..2000).map(|_| rng.random_range(-8.0..8.0)).collect();
        let bad = domain_formula_violations(&f, &g, &points);
        prop_assert!(bad.is_empty(), "f = {} on {}, g = {} on {}: {:?}", f.map(), f.domain(), g.map(), g.domain(), &bad[..bad.len().min(5)]);
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g, h) = (random_map(&mut rng), random_map(&mut rng), random_map(&mut rng));
        let left = compose_partial(&f, &compose_partial(&g, &h).unwrap()).unwrap();
        let right = compose_partial(&compose_partial(&f, &g).unwrap(), &h).unwrap();
        prop_assert_eq!(left.domain(), right.domain(), "f = {}, g = {}, h = {}", f.map(), g.map(), h.map());
        for c in left.domain().components() {
            let (lo, hi) = (c.lo.max(-8.0), c.hi.min(8.0));
            for k in 1..20 {
                let x = lo + (hi - lo) * k as f64 / 20.0;
                if c.contains(x) {
                    let bits = |m: &PartialMap| m.apply(x).ok().map(f64::to_bits);
                    prop_assert_eq!(bits(&left), bits(&right), "at {}", x);
                }
            }
        }
    }

    #[test]
    fn germ_equivalence_is_an_equivalence(seed in any::<u64>(), x0 in -1.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = ["x1^2", "x1*x1", "x1^2 + 1e-3", "sin(x1)"];
        let germs: Vec<Germ> = (0..3)
            .map(|_| {
                let lo = x0 - rng.random_range(0.1..3.0);
                let hi = x0 + rng.random_range(0.1..3.0);
                let e = pool[rng.random_range(0..pool.len())];
                Germ::new(PartialMap::parse(OpenSet1D::interval(lo, hi), e, OpenSet1D::real_line()).unwrap(), x0).unwrap()
            })
            .collect();
        let eq = |a: &Germ, b: &Germ| germ_equal(a, b, 64).unwrap().passed();
        for a in &germs {
            prop_assert!(eq(a, a));
            for b in &germs {
                prop_assert_eq!(eq(a, b), eq(b, a));
                for c in &germs {
                    if eq(a, b) && eq(b, c) {
                        prop_assert!(eq(a, c));
                    }
                }
            }
        }
    }
}
