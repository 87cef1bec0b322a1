//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['-'] integer | '(' ['-'] integer ')'
//! primary := number | ident | func '(' sum ')' | '(' sum ')'
//! ```

use super::{BinaryOp, Expr, Node, UnaryOp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit())
        {
            let mut integral = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("bad number `{text}`"),
            })?;
            out.push((Tok::Num(value, integral), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", &src[start..].chars().next().unwrap()),
                    })
                }
            };
            i += c.len_utf8();
            out.push((tok, start));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a, F> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    known: &'a F,
}

impl<F: Fn(&str) -> bool> Parser<'_, F> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.fail("expected `)`")
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::raw(Node::Binary(op, lhs, rhs));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::raw(Node::Binary(op, lhs, rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::raw(Node::Unary(UnaryOp::Neg, inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let parens = *self.peek() == Tok::LParen;
        if parens {
            self.bump();
        }
        let negative = *self.peek() == Tok::Op('-');
        if negative {
            self.bump();
        }
        let n = match self.peek().clone() {
            Tok::Num(v, true) if v <= i32::MAX as f64 => {
                self.bump();
                v as i32
            }
            _ => return self.fail("exponent must be an integer literal"),
        };
        if parens {
            self.expect_rparen()?;
        }
        if *self.peek() == Tok::Op('^') {
            return self.fail("chained exponents need parentheses");
        }
        Ok(Expr::raw(Node::Pow(base, if negative { -n } else { n })))
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::raw(Node::Const(v)))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let Some(op) = UnaryOp::from_name(&name) else {
                        return Err(Error::Syntax {
                            offset,
                            message: format!("unknown function `{name}`"),
                        });
                    };
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(Expr::raw(Node::Unary(op, arg)));
                }
                if !(self.known)(&name) {
                    return Err(Error::UnknownVariable { name, offset });
                }
                Ok(Expr::raw(Node::Var(name)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::End => self.fail("unexpected end of input"),
            t => self.fail(format!("unexpected token {t:?}")),
        }
    }
}

/// Parses `source`, accepting only variables listed in `allowed_vars`.
pub fn parse_expr<S: AsRef<str>>(source: &str, allowed_vars: &[S]) -> Result<Expr> {
    parse_expr_with(source, &|name: &str| allowed_vars.iter().any(|v| v.as_ref() == name))
}

/// Parses `source` with an arbitrary predicate deciding which names are
/// known variables.
pub fn parse_expr_with<F: Fn(&str) -> bool>(source: &str, known: &F) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        known,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Expr {
        Expr::raw(Node::Var(n.into()))
    }

    #[test]
    fn sum_of_product() {
        let e = parse_expr("z3 + z4*v1", &["z3", "z4", "v1"]).unwrap();
        let expected = Expr::raw(Node::Binary(
            BinaryOp::Add,
            v("z3"),
            Expr::raw(Node::Binary(BinaryOp::Mul, v("z4"), v("v1"))),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn function_application() {
        let e = parse_expr("tan(t1 - t2)", &["t1", "t2"]).unwrap();
        let expected = Expr::raw(Node::Unary(
            UnaryOp::Tan,
            Expr::raw(Node::Binary(BinaryOp::Sub, v("t1"), v("t2"))),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        match parse_expr("z1 +", &["z1"]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable() {
        assert_eq!(
            parse_expr("z1 + q", &["z1"]),
            Err(Error::UnknownVariable {
                name: "q".into(),
                offset: 5
            })
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let vars = ["a", "b", "c"];
        let e = parse_expr("a - b - c", &vars).unwrap();
        let left = Expr::raw(Node::Binary(BinaryOp::Sub, v("a"), v("b")));
        assert_eq!(e, Expr::raw(Node::Binary(BinaryOp::Sub, left, v("c"))));

        let e = parse_expr("-a^2", &vars).unwrap();
        let pow = Expr::raw(Node::Pow(v("a"), 2));
        assert_eq!(e, Expr::raw(Node::Unary(UnaryOp::Neg, pow)));

        let e = parse_expr("a*b^(-3)", &vars).unwrap();
        let pow = Expr::raw(Node::Pow(v("b"), -3));
        assert_eq!(e, Expr::raw(Node::Binary(BinaryOp::Mul, v("a"), pow)));
    }

    #[test]
    fn rejects_non_integer_exponent() {
        assert!(matches!(parse_expr("a^1.5", &["a"]), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("a^b", &["a", "b"]), Err(Error::Syntax { .. })));
    }

    #[test]
    fn literals() {
        let e = parse_expr("3.5 + 1e-3", &[] as &[&str]).unwrap();
        let expected = Expr::raw(Node::Binary(
            BinaryOp::Add,
            Expr::raw(Node::Const(3.5)),
            Expr::raw(Node::Const(1e-3)),
        ));
        assert_eq!(e, expected);
    }
}
