//! Parse vector fields, take Lie brackets symbolically, and compare them
//! against a finite-difference bracket.

use flat5::expr::parse_expr;
use flat5::verification::fd_bracket_oracle;
use flat5::{lie_bracket, lie_derivative, Assignment, Expr, VectorField};

fn field(state: &[&str], components: &[&str]) -> VectorField {
    let names: Vec<String> = state.iter().map(|s| s.to_string()).collect();
    let exprs = components.iter().map(|c| parse_expr(c, state).unwrap()).collect();
    VectorField::new(names, exprs).unwrap()
}

fn main() {
    let state = ["x", "y", "theta"];
    // unicycle: drive and turn
    let drive = field(&state, &["cos(theta)", "sin(theta)", "0"]);
    let turn = field(&state, &["0", "0", "1"]);

    let b = lie_bracket(&drive, &turn);
    println!("[drive, turn] =");
    for (name, c) in state.iter().zip(b.components()) {
        println!("  d{name}: {c}");
    }

    let at: Assignment = [("x", 0.3), ("y", -1.0), ("theta", 0.7)].into_iter().collect();
    println!("value at {:?}: {:?}", at, b.evaluate(&at).unwrap());
    println!("finite-difference deviation: {:.2e}", fd_bracket_oracle(&drive, &turn, &at).unwrap());

    let h: Expr = parse_expr("x*cos(theta) + y*sin(theta)", &state).unwrap();
    println!("L_drive h = {}", lie_derivative(&h, &drive));
}
