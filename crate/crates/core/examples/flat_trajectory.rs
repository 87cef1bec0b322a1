//! Plan a trajectory through a flat output: recover states and inputs of
//! a normal form, then integrate the form with those inputs.

use std::collections::BTreeMap;

use flat5::expr::parse_expr;
use flat5::flat::{parametrize_trajectory, FlatOutputCurve, TimeGrid};
use flat5::normal_forms::{BasePoint, NormalFormSpec, Slot, Variant, STATE};
use flat5::verification::trajectory_roundtrip_error;

fn main() {
    let free = [
        (Slot::B1, parse_expr("0.2*z2*z4", &STATE).unwrap()),
        (Slot::A1, parse_expr("sin(z3) - 0.1*z5^2", &STATE).unwrap()),
    ];
    let base = BasePoint::new([0.0, 0.0, 0.0, 0.0, 0.0], [1.0, 0.0]);
    let spec = NormalFormSpec::normalized(Variant::Nf3, free, BTreeMap::new(), base).unwrap();

    // φ1 = t, φ2 = t^3/6 - t^4/20
    let curve = FlatOutputCurve::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0 / 6.0, -0.05]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 1e-3).unwrap();
    let traj = parametrize_trajectory(&spec, &curve, &grid).unwrap();

    println!("derivative orders used: {:?}, differential weight {}", traj.orders, traj.differential_weight());
    println!("smallest solve margin: {:.3}", traj.min_margin());
    for k in (0..traj.t.len()).step_by(250) {
        println!("t={:.2} z={:.4?} v={:.4?}", traj.t[k], traj.z[k], traj.v[k]);
    }
    let err = trajectory_roundtrip_error(&spec, &traj, &grid).unwrap();
    println!("integrating the recovered inputs reproduces z to {err:.1e}");

    let mut csv = Vec::new();
    traj.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
}
