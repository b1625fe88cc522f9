use super::{Expr, ExprError, Func, Node, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Token, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Token::End, start));
        };
        let single = match c {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|n| (Token::Num(n), start));
        }
        if c.is_ascii_alphabetic() {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let ident = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Token::Ident(ident), start));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", char::from(c)),
        })
    }

    fn number(&mut self, start: usize) -> Result<f64> {
        let digits = |lx: &mut Self| {
            let from = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - from
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ExprError::Syntax { offset: start, message: "malformed number".into() });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mut look = self.pos + 1;
            if matches!(self.src.get(look), Some(b'+' | b'-')) {
                look += 1;
            }
            if self.src.get(look).is_some_and(u8::is_ascii_digit) {
                self.pos = look;
                digits(self);
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ExprError::Syntax { offset: start, message: format!("bad number `{text}`") })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    offset: usize,
    arity: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (tok, off) = self.lexer.next_token()?;
        self.current = tok;
        self.offset = off;
        Ok(())
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<()> {
        if self.current != tok {
            return Err(self.unexpected(what));
        }
        self.bump()
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match &self.current {
            Token::End => "end of input".to_string(),
            Token::Num(n) => format!("number {n}"),
            Token::Ident(s) => format!("`{s}`"),
            other => format!("{other:?}"),
        };
        ExprError::Syntax { offset: self.offset, message: format!("expected {what}, found {found}") }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.current {
                Token::Plus => {
                    self.bump()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.bump()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.current {
                Token::Star => {
                    self.bump()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.bump()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.current == Token::Caret {
            self.bump()?;
            let exponent = self.atom()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.current.clone() {
            Token::Num(n) => {
                self.bump()?;
                Ok(Node::Const(n))
            }
            Token::Minus => {
                self.bump()?;
                Ok(Node::Neg(Box::new(self.atom()?)))
            }
            Token::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let offset = self.offset;
                self.bump()?;
                if name == "t" {
                    return Ok(Node::Time);
                }
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Token::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                let index = variable_index(&name)
                    .ok_or(ExprError::UnknownIdentifier { name, offset })?;
                if index > self.arity {
                    return Err(ExprError::Arity { index, arity: self.arity });
                }
                Ok(Node::Var(index))
            }
            _ => Err(self.unexpected("an operand")),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Parses `src` as an expression in the variables `x1..x{arity}` and `t`.
pub fn parse(src: &str, arity: usize) -> Result<Expr> {
    let mut parser = Parser {
        lexer: Lexer { src: src.as_bytes(), pos: 0 },
        current: Token::End,
        offset: 0,
        arity,
    };
    parser.bump()?;
    let root = parser.expr()?;
    if parser.current != Token::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Expr::new(root, arity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: Node) -> Box<Node> {
        Box::new(n)
    }

    #[test]
    fn power_production() {
        let e = parse("x1^2", 1).unwrap();
        assert_eq!(e.root(), &Node::Pow(b(Node::Var(1)), b(Node::Const(2.0))));
    }

    #[test]
    fn sum_of_product_and_time() {
        let e = parse("sin(x1)*x2 + t", 2).unwrap();
        let expected = Node::Add(
            b(Node::Mul(b(Node::Call(Func::Sin, b(Node::Var(1)))), b(Node::Var(2)))),
            b(Node::Time),
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn arity_violation() {
        assert_eq!(parse("x3", 2), Err(ExprError::Arity { index: 3, arity: 2 }));
    }

    #[test]
    fn unknown_identifier_carries_offset() {
        assert_eq!(
            parse("1 + foo", 1),
            Err(ExprError::UnknownIdentifier { name: "foo".into(), offset: 4 })
        );
        assert!(matches!(parse("x0", 1), Err(ExprError::UnknownIdentifier { .. })));
    }

    #[test]
    fn syntax_errors_carry_offset() {
        assert!(matches!(parse("1 +", 1), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("(x1", 1), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 $ 2", 1), Err(ExprError::Syntax { offset: 3, .. })));
        // `factor := atom ('^' atom)?` admits a single exponent only
        assert!(matches!(parse("x1^2^3", 1), Err(ExprError::Syntax { offset: 4, .. })));
    }

    #[test]
    fn unary_minus_binds_to_atom() {
        // '-' atom, then '^': (-x1)^2
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.root(), &Node::Pow(b(Node::Neg(b(Node::Var(1)))), b(Node::Const(2.0))));
        let e = parse("x1^-2", 1).unwrap();
        assert_eq!(e.eval(&[2.0], 0.0).unwrap(), 0.25);
    }

    #[test]
    fn numbers_with_exponents() {
        let e = parse("1.5e-3 + 2E2 + .5", 0).unwrap();
        assert!((e.eval(&[], 0.0).unwrap() - 200.5015).abs() < 1e-12);
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse("10 - 4 - 3", 0).unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), 3.0);
        let e = parse("8 / 4 / 2", 0).unwrap();
        assert_eq!(e.eval(&[], 0.0).unwrap(), 1.0);
    }
}
