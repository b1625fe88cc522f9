mod common;

use common::{derivative_error, random_expr, random_point};
use dynsys::expr::{parse, Expr, Node};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_matches_central_difference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 2);
        for _ in 0..4 {
            let p = random_point(&mut rng, 2);
            for var in 1..=2 {
                if let Some(err) = derivative_error(&e, &p, 0.3, var) {
                    prop_assert!(err < 1e-5, "{e} at {p:?} in x{var}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn parse_inverts_print(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_expr(&mut rng, 3);
        let back = parse(&e.to_string(), 3).unwrap();
        prop_assert_eq!(back.root(), e.root(), "printed as {}", e);
    }

    #[test]
    fn differentiation_is_linear(seed in any::<u64>(), a in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e1, e2) = (random_expr(&mut rng, 2), random_expr(&mut rng, 2));
        let combo = Node::Add(
            Box::new(Node::Mul(Box::new(Node::Const(a)), Box::new(e1.root().clone()))),
            Box::new(e2.root().clone()),
        );
        let combo = Expr::new(combo, 2).unwrap();
        for var in 1..=2 {
            let (d, d1, d2) = (
                combo.differentiate(var).unwrap(),
                e1.differentiate(var).unwrap(),
                e2.differentiate(var).unwrap(),
            );
            for _ in 0..5 {
                let p = random_point(&mut rng, 2);
                if let (Ok(l), Ok(r1), Ok(r2)) = (d.eval(&p, 0.0), d1.eval(&p, 0.0), d2.eval(&p, 0.0)) {
                    let r = a * r1 + r2;
                    let scale = 1f64.max((a * r1).abs()).max(r2.abs());
                    prop_assert!((l - r).abs() <= 1e-12 * scale, "{l} vs {r}");
                }
            }
        }
    }
}
