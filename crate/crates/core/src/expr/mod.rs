//! Exact expression trees for smooth scalar functions.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees are shared
//! freely, so derivatives of large expressions reuse the nodes of the
//! original instead of copying them. Constructors fold literal zeros and
//! ones and constant subexpressions; nothing else is simplified.

mod diff;
mod eval;
mod parse;
pub mod series;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use eval::{Assignment, Number, Tape};
pub use parse::{parse_expr, parse_expr_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tan => x.tan(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Ln => x.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
    Pow(Expr, i32),
}

/// A smooth scalar function of named variables.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Wraps a node without any folding. Used by the parser so that the
    /// tree mirrors the source text.
    pub fn raw(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Self {
        Expr::raw(Node::Const(c))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::raw(Node::Var(name.into()))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        if let Some(c) = arg.as_const() {
            let v = op.apply(c);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        if op == UnaryOp::Neg {
            if let Node::Unary(UnaryOp::Neg, inner) = arg.node() {
                return inner.clone();
            }
        }
        Expr::raw(Node::Unary(op, arg))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = op.apply(x, y);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        match op {
            BinaryOp::Add => {
                if a.is_zero() {
                    return b;
                }
                if b.is_zero() {
                    return a;
                }
            }
            BinaryOp::Sub => {
                if b.is_zero() {
                    return a;
                }
                if a.is_zero() {
                    return Expr::unary(UnaryOp::Neg, b);
                }
            }
            BinaryOp::Mul => {
                if a.is_zero() || b.is_zero() {
                    return Expr::zero();
                }
                if a.is_one() {
                    return b;
                }
                if b.is_one() {
                    return a;
                }
            }
            BinaryOp::Div => {
                if a.is_zero() && !b.is_zero() {
                    return Expr::zero();
                }
                if b.is_one() {
                    return a;
                }
            }
        }
        Expr::raw(Node::Binary(op, a, b))
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Expr::one(),
            1 => self.clone(),
            _ => {
                if let Some(c) = self.as_const() {
                    let v = c.powi(n);
                    if v.is_finite() {
                        return Expr::constant(v);
                    }
                }
                Expr::raw(Node::Pow(self.clone(), n))
            }
        }
    }

    pub fn sin(&self) -> Self {
        Expr::unary(UnaryOp::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Expr::unary(UnaryOp::Cos, self.clone())
    }

    pub fn tan(&self) -> Self {
        Expr::unary(UnaryOp::Tan, self.clone())
    }

    pub fn exp(&self) -> Self {
        Expr::unary(UnaryOp::Exp, self.clone())
    }

    pub fn ln(&self) -> Self {
        Expr::unary(UnaryOp::Ln, self.clone())
    }

    /// Sum of an iterator of expressions with zero folding.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms
            .into_iter()
            .fold(Expr::zero(), |acc, t| Expr::binary(BinaryOp::Add, acc, t))
    }

    /// Names of all variables occurring in the tree.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.node() {
                Node::Const(_) => {}
                Node::Var(v) => {
                    out.insert(v.clone());
                }
                Node::Unary(_, a) | Node::Pow(a, _) => stack.push(a.clone()),
                Node::Binary(_, a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        out
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    /// Replaces variables by expressions. Shared subtrees stay shared.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.substitute_memo(map, &mut memo)
    }

    fn substitute_memo(
        &self,
        map: &BTreeMap<String, Expr>,
        memo: &mut std::collections::HashMap<usize, Expr>,
    ) -> Expr {
        if let Some(e) = memo.get(&self.id()) {
            return e.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Node::Unary(op, a) => Expr::unary(*op, a.substitute_memo(map, memo)),
            Node::Binary(op, a, b) => {
                let a = a.substitute_memo(map, memo);
                let b = b.substitute_memo(map, memo);
                Expr::binary(*op, a, b)
            }
            Node::Pow(a, n) => a.substitute_memo(map, memo).powi(*n),
        };
        memo.insert(self.id(), out.clone());
        out
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Unary(_, a) | Node::Pow(a, _) => stack.push(a.clone()),
                Node::Binary(_, a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs)
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::constant(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self.clone(), Expr::constant(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }
}

// Binding strength used when printing: higher binds tighter.
fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 => 0,
        Node::Const(_) | Node::Var(_) => 5,
        Node::Unary(UnaryOp::Neg, _) => 3,
        Node::Unary(..) => 5,
        Node::Pow(..) => 4,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints in the parser's grammar; re-parsing a parsed expression gives a
/// structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                write_operand(f, a, 3)
            }
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Pow(a, n) => {
                write_operand(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Binary(op, a, b) => {
                let p = precedence(self);
                write_operand(f, a, p)?;
                write!(f, " {} ", op.symbol())?;
                // left-associative: right operand of equal precedence needs parens
                write_operand(f, b, p + 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_rules() {
        let z = Expr::var("z");
        assert_eq!(Expr::zero() * &z, Expr::zero());
        assert_eq!(&z + 0.0, z);
        assert_eq!(1.0 * &z, z);
        assert_eq!(Expr::constant(2.0) * 3.0, Expr::constant(6.0));
        assert_eq!(-(-&z), z);
    }

    #[test]
    fn substitution_replaces_variables() {
        let e = parse_expr("z1 * z2 + z1", &["z1", "z2"]).unwrap();
        let mut map = BTreeMap::new();
        map.insert("z1".to_string(), Expr::constant(2.0));
        let s = e.substitute(&map);
        assert_eq!(s.free_vars().into_iter().collect::<Vec<_>>(), vec!["z2"]);
    }

    #[test]
    fn display_reparses() {
        for src in [
            "z1 - (z2 - z3)",
            "-z1^2",
            "(-z1)^2",
            "z1 / (z2 * z3)",
            "sin(z1 + z2) * cos(z3)^(-2)",
            "z1 - -z2",
        ] {
            let e = parse_expr(src, &["z1", "z2", "z3"]).unwrap();
            let again = parse_expr(&e.to_string(), &["z1", "z2", "z3"]).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
