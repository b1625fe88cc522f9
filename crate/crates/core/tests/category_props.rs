mod common;

use common::{random_expr, random_point};
use dynsys::category::{compose_morphisms, MorphismCandidate, State, SystemSpec};
use dynsys::continuous::{ContinuousSystem, SmoothMap};
use dynsys::discrete::{DiscreteMap, DiscreteSystem};
use dynsys::expr::VectorExpr;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn discrete_system() -> impl Strategy<Value = DiscreteSystem> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec(0..n, n).prop_map(move |t| {
            DiscreteSystem::from_indices((0..n).map(|i| format!("e{i}")).collect(), t).unwrap()
        })
    })
}

fn discrete_map(src: &DiscreteSystem, dst: &DiscreteSystem, table: &[usize]) -> MorphismCandidate {
    let m = dst.len();
    let table = table.iter().take(src.len()).map(|i| i % m).collect();
    MorphismCandidate::Discrete {
        map: DiscreteMap::from_indices(table, m).unwrap(),
        source: src.clone(),
        target: dst.clone(),
    }
}

fn images(m: &MorphismCandidate, xs: &[State]) -> Vec<State> {
    xs.iter().map(|x| m.apply(x).unwrap()).collect()
}

fn smooth(seed: u64, sys: &ContinuousSystem) -> MorphismCandidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = VectorExpr::new(vec![random_expr(&mut rng, 2), random_expr(&mut rng, 2)], 2).unwrap();
    MorphismCandidate::Smooth { map: SmoothMap::new(v), source: sys.clone(), target: sys.clone() }
}

fn close(a: &State, b: &State) -> bool {
    match (a, b) {
        (State::Vector(u), State::Vector(v)) => {
            u.iter().zip(v).all(|(x, y)| x == y || (x - y).abs() <= 1e-12 * x.abs().max(1.0))
        }
        _ => a == b,
    }
}

proptest! {
    #[test]
    fn discrete_identity_and_associativity(
        x in discrete_system(),
        y in discrete_system(),
        z in discrete_system(),
        w in discrete_system(),
        tables in prop::collection::vec(prop::collection::vec(0usize..4, 4), 3),
    ) {
        let f = discrete_map(&x, &y, &tables[0]);
        let g = discrete_map(&y, &z, &tables[1]);
        let h = discrete_map(&z, &w, &tables[2]);
        let all = SystemSpec::Discrete(x.clone()).samples(0);
        let id_x = MorphismCandidate::identity(&SystemSpec::Discrete(x.clone()));
        let id_y = MorphismCandidate::identity(&SystemSpec::Discrete(y.clone()));
        prop_assert_eq!(images(&compose_morphisms(&id_x, &f).unwrap(), &all), images(&f, &all));
        prop_assert_eq!(images(&compose_morphisms(&f, &id_y).unwrap(), &all), images(&f, &all));
        let left = compose_morphisms(&compose_morphisms(&f, &g).unwrap(), &h).unwrap();
        let right = compose_morphisms(&f, &compose_morphisms(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn smooth_identity_and_associativity(seeds in any::<[u64; 4]>()) {
        let sys = ContinuousSystem::parse(&["x2", "-x1"]).unwrap();
        let (f, g, h) = (smooth(seeds[0], &sys), smooth(seeds[1], &sys), smooth(seeds[2], &sys));
        let id = MorphismCandidate::identity(&SystemSpec::Continuous(sys.clone()));
        let pairs = [
            (compose_morphisms(&id, &f).unwrap(), f.clone()),
            (compose_morphisms(&f, &id).unwrap(), f.clone()),
            (
                compose_morphisms(&compose_morphisms(&f, &g).unwrap(), &h).unwrap(),
                compose_morphisms(&f, &compose_morphisms(&g, &h).unwrap()).unwrap(),
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seeds[3]);
        for _ in 0..100 {
            let p = State::Vector(random_point(&mut rng, 2));
            for (a, b) in &pairs {
                match (a.apply(&p), b.apply(&p)) {
                    (Ok(u), Ok(v)) => prop_assert!(close(&u, &v), "{} vs {} at {}", u, v, p),
                    (Err(_), Err(_)) => {}
                    (u, v) => prop_assert!(false, "definedness differs at {}: {:?} vs {:?}", p, u, v),
                }
            }
        }
    }
}
