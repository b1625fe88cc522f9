#![allow(dead_code)]

use dynsys::expr::{Expr, Func, Node};
use dynsys::germ::{compose_partial, Interval, OpenSet1D, PartialMap};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn leaf<R: Rng>(rng: &mut R, arity: usize) -> Node {
    match rng.random_range(0..5) {
        0 | 1 => Node::Var(rng.random_range(1..=arity)),
        2 => Node::Time,
        3 => Node::Const([0.5, 1.0, 2.0, 3.0][rng.random_range(0..4)]),
        _ => Node::Const((rng.random_range(0.0..5.0f64) * 100.0).round() / 100.0),
    }
}

fn positive(a: Node) -> Node {
    Node::Add(Box::new(Node::Const(1.0)), Box::new(Node::Pow(Box::new(a), Box::new(Node::Const(2.0)))))
}

/// Random tree over the whole grammar. Arguments of `log`, `sqrt` and
/// denominators are wrapped as `1 + a^2`.
pub fn random_node<R: Rng>(rng: &mut R, depth: usize, arity: usize) -> Node {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng, arity);
    }
    let sub = |rng: &mut R| Box::new(random_node(rng, depth - 1, arity));
    match rng.random_range(0..11) {
        0 => Node::Neg(sub(rng)),
        1 => Node::Add(sub(rng), sub(rng)),
        2 => Node::Sub(sub(rng), sub(rng)),
        3 | 4 => Node::Mul(sub(rng), sub(rng)),
        5 => Node::Div(sub(rng), Box::new(positive(*sub(rng)))),
        6 => Node::Pow(sub(rng), Box::new(Node::Const([2.0, 3.0][rng.random_range(0..2)]))),
        7 => Node::Call([Func::Sin, Func::Cos][rng.random_range(0..2)], sub(rng)),
        8 => Node::Call([Func::Exp, Func::Tanh][rng.random_range(0..2)], sub(rng)),
        9 => Node::Call(Func::Log, Box::new(positive(*sub(rng)))),
        _ => Node::Call(Func::Sqrt, Box::new(positive(*sub(rng)))),
    }
}

pub fn random_expr<R: Rng>(rng: &mut R, arity: usize) -> Expr {
    Expr::new(random_node(rng, 3, arity), arity).expect("variables within arity")
}

pub fn random_point<R: Rng>(rng: &mut R, arity: usize) -> Vec<f64> {
    (0..arity).map(|_| rng.random_range(-1.5..1.5)).collect()
}

pub const FD_STEP: f64 = 1e-5;

/// Central difference of `e` in `x{var}`; `None` if the stencil leaves the
/// natural domain.
pub fn central_difference(e: &Expr, p: &[f64], t: f64, var: usize) -> Option<f64> {
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[var - 1] += FD_STEP;
    minus[var - 1] -= FD_STEP;
    let (a, b) = (e.eval(&plus, t).ok()?, e.eval(&minus, t).ok()?);
    let d = (a - b) / (2.0 * FD_STEP);
    d.is_finite().then_some(d)
}

/// Relative error between the symbolic derivative and a central
/// difference, floored at 1 in the denominator. `None` when either is
/// undefined.
pub fn derivative_error(e: &Expr, p: &[f64], t: f64, var: usize) -> Option<f64> {
    let d = e.differentiate(var).ok()?.eval(p, t).ok().filter(|v| v.is_finite())?;
    let fd = central_difference(e, p, t, var)?;
    Some((d - fd).abs() / d.abs().max(fd.abs()).max(1.0))
}

const MARGIN: f64 = 1e-9;

fn random_piecewise_expr(rng: &mut ChaCha8Rng) -> String {
    let a = (rng.random_range(0.3..2.5f64) * 100.0).round() / 100.0 * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b = (rng.random_range(-3.0..3.0f64) * 100.0).round() / 100.0;
    match rng.random_range(0..7) {
        0 => format!("({a})*x1 + ({b})"),
        1 => format!("exp(({a})*x1)"),
        2 => format!("x1^3 + ({b})"),
        3 => format!("({a})*tanh(x1)"),
        4 => format!("x1^2 + ({b})"),
        5 => "sin(x1)".to_string(),
        _ => format!("({a})/(1 + x1^2)"),
    }
}

pub fn random_domain(rng: &mut ChaCha8Rng) -> OpenSet1D {
    let k = rng.random_range(0..4);
    if k == 0 {
        return OpenSet1D::real_line();
    }
    let mut cuts: Vec<f64> = (0..2 * k).map(|_| (rng.random_range(-6.0..6.0f64) * 1000.0).round() / 1000.0).collect();
    cuts.sort_by(f64::total_cmp);
    if rng.random_bool(0.3) {
        cuts[0] = f64::NEG_INFINITY;
    }
    let intervals = cuts.chunks(2).filter(|c| c[0] < c[1]).map(|c| Interval::new(c[0], c[1]));
    OpenSet1D::from_intervals(intervals)
}

/// `sin` has finitely many monotone pieces only on bounded sets.
pub fn random_partial_map(rng: &mut ChaCha8Rng) -> PartialMap {
    let mut domain = random_domain(rng);
    let e = random_piecewise_expr(rng);
    if e.starts_with("sin") {
        domain = domain.intersect(&OpenSet1D::interval(-7.0, 7.0));
    }
    PartialMap::parse(domain, &e, OpenSet1D::real_line()).unwrap()
}

fn near_boundary(set: &OpenSet1D, x: f64) -> bool {
    set.components()
        .iter()
        .flat_map(|c| [c.lo, c.hi])
        .any(|e| e.is_finite() && (x - e).abs() <= MARGIN * e.abs().max(1.0))
}

/// Points violating `p ∈ dom(g∘f) ⟺ p ∈ dom f ∧ f(p) ∈ dom g`, away from
/// boundaries.
pub fn domain_formula_violations(f: &PartialMap, g: &PartialMap, points: &[f64]) -> Vec<f64> {
    let gf = compose_partial(f, g).unwrap();
    points
        .iter()
        .copied()
        .filter(|&p| {
            if near_boundary(f.domain(), p) || near_boundary(gf.domain(), p) {
                return false;
            }
            let expected = match f.apply(p) {
                Ok(y) if near_boundary(g.domain(), y) => return false,
                Ok(y) => g.domain().contains(y),
                Err(_) => false,
            };
            gf.domain().contains(p) != expected
        })
        .collect()
}

