use std::collections::{BTreeMap, HashMap};

use super::{BinaryOp, Expr, Node, UnaryOp};
use crate::error::{Error, Result};

/// Values for named variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment(BTreeMap<String, f64>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }

    pub fn extend<I: IntoIterator<Item = (String, f64)>>(&mut self, it: I) {
        self.0.extend(it);
    }

    /// Values for `names` in order.
    pub fn values_for<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| {
                self.get(n.as_ref())
                    .ok_or_else(|| Error::Unassigned(n.as_ref().to_string()))
            })
            .collect()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Scalar-like values a [`Tape`] can be evaluated over.
pub trait Number: Clone {
    fn lift(c: f64, like: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn finite(&self) -> bool;
}

impl Number for f64 {
    fn lift(c: f64, _: &Self) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
    Pow(usize, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(usize),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
    Pow(usize, i32),
}

/// A list of expressions flattened into straight-line code over a fixed
/// variable order. Structurally equal subtrees are evaluated once.
#[derive(Debug, Clone)]
pub struct Tape {
    vars: Vec<String>,
    instrs: Vec<Instr>,
    sources: Vec<Expr>,
    outputs: Vec<usize>,
}

struct Builder<'a> {
    vars: &'a HashMap<&'a str, usize>,
    instrs: Vec<Instr>,
    sources: Vec<Expr>,
    by_node: HashMap<usize, usize>,
    by_key: HashMap<Key, usize>,
}

impl Builder<'_> {
    fn push(&mut self, e: &Expr, instr: Instr, key: Key) -> usize {
        if let Some(&i) = self.by_key.get(&key) {
            return i;
        }
        self.instrs.push(instr);
        self.sources.push(e.clone());
        let i = self.instrs.len() - 1;
        self.by_key.insert(key, i);
        i
    }

    fn visit(&mut self, e: &Expr) -> Result<usize> {
        if let Some(&i) = self.by_node.get(&e.id()) {
            return Ok(i);
        }
        let i = match e.node() {
            Node::Const(c) => self.push(e, Instr::Const(*c), Key::Const(c.to_bits())),
            Node::Var(v) => {
                let slot = *self
                    .vars
                    .get(v.as_str())
                    .ok_or_else(|| Error::Unassigned(v.clone()))?;
                self.push(e, Instr::Var(slot), Key::Var(slot))
            }
            Node::Unary(op, a) => {
                let a = self.visit(a)?;
                self.push(e, Instr::Unary(*op, a), Key::Unary(*op, a))
            }
            Node::Binary(op, a, b) => {
                let a = self.visit(a)?;
                let b = self.visit(b)?;
                self.push(e, Instr::Binary(*op, a, b), Key::Binary(*op, a, b))
            }
            Node::Pow(a, n) => {
                let a = self.visit(a)?;
                self.push(e, Instr::Pow(a, *n), Key::Pow(a, *n))
            }
        };
        self.by_node.insert(e.id(), i);
        Ok(i)
    }
}

fn describe(e: &Expr) -> String {
    let mut s = e.to_string();
    if s.len() > 160 {
        let mut cut = 160;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push_str("...");
    }
    s
}

impl Tape {
    /// Compiles `exprs` over the variables `vars` (inputs are passed in
    /// this order at evaluation time).
    pub fn compile<S: AsRef<str>>(exprs: &[Expr], vars: &[S]) -> Result<Tape> {
        let index: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_ref(), i))
            .collect();
        let mut b = Builder {
            vars: &index,
            instrs: Vec::new(),
            sources: Vec::new(),
            by_node: HashMap::new(),
            by_key: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| b.visit(e)).collect::<Result<Vec<_>>>()?;
        Ok(Tape {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            instrs: b.instrs,
            sources: b.sources,
            outputs,
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.eval_generic(inputs, &0.0)
    }

    /// Evaluates over any [`Number`]; `like` supplies the shape for
    /// literal constants.
    pub fn eval_generic<T: Number>(&self, inputs: &[T], like: &T) -> Result<Vec<T>> {
        if inputs.len() != self.vars.len() {
            return Err(Error::Dimension(format!(
                "tape expects {} inputs, got {}",
                self.vars.len(),
                inputs.len()
            )));
        }
        let mut regs: Vec<T> = Vec::with_capacity(self.instrs.len());
        for (i, instr) in self.instrs.iter().enumerate() {
            let v = match *instr {
                Instr::Const(c) => T::lift(c, like),
                Instr::Var(s) => inputs[s].clone(),
                Instr::Unary(op, a) => {
                    let a = &regs[a];
                    match op {
                        UnaryOp::Neg => a.neg(),
                        UnaryOp::Sin => a.sin(),
                        UnaryOp::Cos => a.cos(),
                        UnaryOp::Tan => a.tan(),
                        UnaryOp::Exp => a.exp(),
                        UnaryOp::Ln => a.ln(),
                    }
                }
                Instr::Binary(op, a, b) => {
                    let (a, b) = (&regs[a], &regs[b]);
                    match op {
                        BinaryOp::Add => a.add(b),
                        BinaryOp::Sub => a.sub(b),
                        BinaryOp::Mul => a.mul(b),
                        BinaryOp::Div => a.div(b),
                    }
                }
                Instr::Pow(a, n) => regs[a].powi(n),
            };
            if !v.finite() {
                return Err(Error::Domain {
                    subtree: describe(&self.sources[i]),
                });
            }
            regs.push(v);
        }
        Ok(self.outputs.iter().map(|&o| regs[o].clone()).collect())
    }
}

impl Expr {
    /// IEEE double evaluation; every free variable must be assigned.
    pub fn evaluate(&self, at: &Assignment) -> Result<f64> {
        let vars: Vec<String> = self.free_vars().into_iter().collect();
        let values = at.values_for(&vars)?;
        let tape = Tape::compile(std::slice::from_ref(self), &vars)?;
        Ok(tape.eval(&values)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn sine_at_zero() {
        let e = parse_expr("sin(0)", &[] as &[&str]).unwrap();
        assert_eq!(e.evaluate(&Assignment::new()).unwrap(), 0.0);
    }

    #[test]
    fn pole_is_a_domain_error() {
        let e = parse_expr("1/(z2)", &["z2"]).unwrap();
        let err = e.evaluate(&Assignment::new().with("z2", 0.0)).unwrap_err();
        assert!(matches!(err, Error::Domain { ref subtree } if subtree == "1 / z2"));
    }

    #[test]
    fn tangent_matches_sine_over_cosine() {
        // second route: sin/cos from their own series
        let e = parse_expr("tan(t1)", &["t1"]).unwrap();
        let got = e.evaluate(&Assignment::new().with("t1", 0.5)).unwrap();
        let (mut s, mut c, mut term) = (0.0f64, 0.0f64, 1.0f64);
        for k in 0..30 {
            if k % 2 == 0 {
                c += if (k / 2) % 2 == 0 { term } else { -term };
            } else {
                s += if (k / 2) % 2 == 0 { term } else { -term };
            }
            term *= 0.5 / (k as f64 + 1.0);
        }
        assert!((got - s / c).abs() < 1e-15);
        assert!((got - 0.546_302_489_843_790_5).abs() < 1e-15);
    }

    #[test]
    fn missing_variable() {
        let e = parse_expr("z1 + z2", &["z1", "z2"]).unwrap();
        let err = e.evaluate(&Assignment::new().with("z1", 1.0)).unwrap_err();
        assert_eq!(err, Error::Unassigned("z2".into()));
    }

    #[test]
    fn tape_shares_equal_subtrees() {
        let a = parse_expr("sin(x)*sin(x)", &["x"]).unwrap();
        let tape = Tape::compile(&[a], &["x"]).unwrap();
        // x, sin(x), product
        assert_eq!(tape.len(), 3);
    }
}
