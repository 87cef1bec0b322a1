use std::collections::HashMap;

use super::{BinaryOp, Expr, Node, UnaryOp};

impl Expr {
    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expr {
        let mut memo = HashMap::new();
        derive(self, var, &mut memo)
    }
}

fn derive(e: &Expr, var: &str, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.id()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Unary(op, a) => {
            let da = derive(a, var, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                match op {
                    UnaryOp::Neg => -da,
                    UnaryOp::Sin => a.cos() * da,
                    UnaryOp::Cos => -(a.sin() * da),
                    UnaryOp::Tan => da / a.cos().powi(2),
                    UnaryOp::Exp => e * da,
                    UnaryOp::Ln => da / a,
                }
            }
        }
        Node::Binary(op, a, b) => {
            let da = derive(a, var, memo);
            let db = derive(b, var, memo);
            match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => da * b + a * db,
                BinaryOp::Div => {
                    if db.is_zero() {
                        da / b
                    } else {
                        (da * b - a * db) / b.powi(2)
                    }
                }
            }
        }
        Node::Pow(a, n) => {
            let da = derive(a, var, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                Expr::constant(*n as f64) * a.powi(n - 1) * da
            }
        }
    };
    memo.insert(e.id(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn product_rule_on_linear_term() {
        let e = parse_expr("z4*v1", &["z4", "v1"]).unwrap();
        assert_eq!(e.differentiate("z4"), Expr::var("v1"));
    }

    #[test]
    fn tangent_derivative() {
        let e = parse_expr("tan(t1)", &["t1"]).unwrap();
        let d = e.differentiate("t1");
        let expected = Expr::one() / Expr::var("t1").cos().powi(2);
        assert_eq!(d, expected);
        assert_eq!(d.to_string(), "1 / cos(t1)^2");
    }

    #[test]
    fn constant_derivative() {
        let e = parse_expr("3.5", &[] as &[&str]).unwrap();
        assert!(e.differentiate("z1").is_zero());
    }
}
