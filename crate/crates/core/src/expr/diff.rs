//! Symbolic partial derivatives with light constant folding.

use super::{Func, Node};

pub(super) fn derivative(node: &Node, var: usize) -> Node {
    match node {
        Node::Const(_) | Node::Time => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, var)),
        Node::Add(a, b) => add(derivative(a, var), derivative(b, var)),
        Node::Sub(a, b) => sub(derivative(a, var), derivative(b, var)),
        Node::Mul(a, b) => add(
            mul(derivative(a, var), (**b).clone()),
            mul((**a).clone(), derivative(b, var)),
        ),
        Node::Div(a, b) => {
            let numerator = sub(
                mul(derivative(a, var), (**b).clone()),
                mul((**a).clone(), derivative(b, var)),
            );
            div(numerator, pow((**b).clone(), Node::Const(2.0)))
        }
        Node::Pow(a, b) => {
            let (a, b) = (&**a, &**b);
            if !b.depends_on(var) {
                // b * a^(b-1) * a'
                let lowered = pow(a.clone(), sub(b.clone(), Node::Const(1.0)));
                mul(mul(b.clone(), lowered), derivative(a, var))
            } else if !a.depends_on(var) {
                // a^b * log(a) * b'
                let ln = call(Func::Log, a.clone());
                mul(mul(pow(a.clone(), b.clone()), ln), derivative(b, var))
            } else {
                // a^b * (b' log(a) + b a'/a)
                let ln = call(Func::Log, a.clone());
                let inner = add(
                    mul(derivative(b, var), ln),
                    div(mul(b.clone(), derivative(a, var)), a.clone()),
                );
                mul(pow(a.clone(), b.clone()), inner)
            }
        }
        Node::Call(f, a) => {
            let da = derivative(a, var);
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Exp => call(Func::Exp, a),
                Func::Log => return div(da, a),
                Func::Sqrt => {
                    return div(da, mul(Node::Const(2.0), call(Func::Sqrt, a)));
                }
                Func::Tanh => sub(
                    Node::Const(1.0),
                    pow(call(Func::Tanh, a), Node::Const(2.0)),
                ),
            };
            mul(outer, da)
        }
    }
}

fn constant(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn fold(value: f64, otherwise: Node) -> Node {
    if value.is_finite() {
        Node::Const(value)
    } else {
        otherwise
    }
}

fn call(f: Func, a: Node) -> Node {
    Node::Call(f, Box::new(a))
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        a => Node::Neg(Box::new(a)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => fold(x + y, Node::Add(Box::new(a), Box::new(b))),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => fold(x - y, Node::Sub(Box::new(a), Box::new(b))),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) => fold(x * y, Node::Mul(Box::new(a), Box::new(b))),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Node::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (constant(&a), constant(&b)) {
        (Some(x), Some(y)) if y != 0.0 => fold(x / y, Node::Div(Box::new(a), Box::new(b))),
        (Some(0.0), _) => Node::Const(0.0),
        (_, Some(1.0)) => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match constant(&b) {
        Some(1.0) => a,
        Some(0.0) => Node::Const(1.0),
        _ => Node::Pow(Box::new(a), Box::new(b)),
    }
}
