use std::fmt;

use super::Node;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;
const ATOM: u8 = 4;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => SUM,
            Node::Mul(..) | Node::Div(..) => PRODUCT,
            Node::Pow(..) => POWER,
            _ => ATOM,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{i}"),
            Node::Time => write!(f, "t"),
            Node::Neg(a) => {
                write!(f, "-")?;
                a.write(f, ATOM)
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                write!(f, ")")
            }
            Node::Add(a, b) => binary(f, a, " + ", b, SUM),
            Node::Sub(a, b) => binary(f, a, " - ", b, SUM),
            Node::Mul(a, b) => binary(f, a, "*", b, PRODUCT),
            Node::Div(a, b) => binary(f, a, "/", b, PRODUCT),
            Node::Pow(a, b) => {
                a.write(f, ATOM)?;
                write!(f, "^")?;
                b.write(f, ATOM)
            }
        }
    }
}

// Left-associative: the right operand needs strictly higher precedence.
fn binary(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node, prec: u8) -> fmt::Result {
    a.write(f, prec)?;
    write!(f, "{op}")?;
    b.write(f, prec + 1)
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
