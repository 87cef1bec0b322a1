//! NF13's flat parametrization is singular where the Jacobian of
//! (φ̇2, φ̈2) with respect to (z3, z4) vanishes. With a = b = c = 0 that
//! determinant is just v̇1 = φ̈1, so a curve whose φ̈1 changes sign fails.

use std::collections::BTreeMap;

use flat5::flat::{parametrize_trajectory, FlatOutputCurve, TimeGrid};
use flat5::normal_forms::{nf13_jacobian_determinant, BasePoint, NormalFormSpec, Variant};
use flat5::Error;

fn main() {
    let base = BasePoint::new([0.0; 5], [1.0, 0.0]).with_vdot([1.0, 0.0]);
    let spec = NormalFormSpec::normalized(Variant::Nf13, [], BTreeMap::new(), base).unwrap();
    println!("det at the base point: {}", nf13_jacobian_determinant(&spec, &[0.0; 5], 1.0, 1.0).unwrap());

    let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
    // φ1 = t + t^2/2: v̇1 = 1 everywhere
    let good = FlatOutputCurve::new(vec![0.0, 1.0, 0.5], vec![0.0, 0.0, 0.5, 0.2]).unwrap();
    let traj = parametrize_trajectory(&spec, &good, &grid).unwrap();
    println!("regular curve: min margin {:.3}, weight {}", traj.min_margin(), traj.differential_weight());

    // φ1 = (t - 1/2)^3: v̇1 = 6 (t - 1/2) vanishes at t = 1/2
    let bad = FlatOutputCurve::new(vec![-0.125, 0.75, -1.5, 1.0], vec![0.0, 0.0, 0.5, 0.2]).unwrap();
    match parametrize_trajectory(&spec, &bad, &grid) {
        Err(Error::SingularNode { node, t, margin }) => {
            println!("singular curve: stops at node {node} (t = {t:.2}), margin {margin:.1e}")
        }
        other => println!("unexpected: {other:?}"),
    }
}
