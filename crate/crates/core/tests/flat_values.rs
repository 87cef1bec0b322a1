use std::collections::BTreeMap;

use flat5::field::{ControlAffineSystem, VectorField};
use flat5::flat::{measured_differential_weight, parametrize_trajectory, FlatOutputCurve, TimeGrid};
use flat5::normal_forms::{BasePoint, NormalFormSpec, Variant};
use flat5::verification::{integrate_rk4, roundtrip_error};
use flat5::Expr;

fn plain(variant: Variant, base: BasePoint) -> NormalFormSpec {
    NormalFormSpec::normalized(variant, [], BTreeMap::new(), base).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(a, b)| (a - b).abs() <= tol)
}

#[test]
fn nf1_recovers_integrator_chain() {
    let spec = plain(Variant::Nf1, BasePoint::new([0.0; 5], [1.0, 0.0]));
    let curve = FlatOutputCurve::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
    let traj = parametrize_trajectory(&spec, &curve, &grid).unwrap();
    for (k, &t) in traj.t.iter().enumerate() {
        let z = [t, t.powi(4), 4.0 * t.powi(3), 12.0 * t * t, 24.0 * t];
        assert!(close(&traj.z[k], &z, 1e-9), "t={t}: {:?}", traj.z[k]);
        assert!(close(&traj.v[k], &[1.0, 24.0], 1e-9));
    }
    assert_eq!(traj.differential_weight(), 7);
    assert!(roundtrip_error(&spec, &curve, &grid).unwrap() <= 1e-9);
}

#[test]
fn nf3_chained_instance() {
    let spec = plain(Variant::Nf3, BasePoint::new([0.0; 5], [1.0, 0.0]));
    let curve = FlatOutputCurve::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 1e-3).unwrap();
    let traj = parametrize_trajectory(&spec, &curve, &grid).unwrap();
    for (k, &t) in traj.t.iter().enumerate().step_by(37) {
        let z = [t, t.powi(3), 3.0 * t * t, 6.0 * t, 6.0];
        assert!(close(&traj.z[k], &z, 1e-9), "t={t}: {:?}", traj.z[k]);
        assert!(close(&traj.v[k], &[1.0, 0.0], 1e-9));
    }
    assert_eq!(traj.orders, (3, 4));
    assert!(roundtrip_error(&spec, &curve, &grid).unwrap() <= 1e-6);
}

#[test]
fn nf13_zero_nonlinearities() {
    let spec = plain(Variant::Nf13, BasePoint::new([0.0; 5], [0.0, 0.0]).with_vdot([2.0, 0.0]));
    let curve = FlatOutputCurve::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 1e-3).unwrap();
    let traj = parametrize_trajectory(&spec, &curve, &grid).unwrap();
    for (k, &t) in traj.t.iter().enumerate().step_by(41) {
        let z = [t * t, t.powi(3), -3.0 * t * t, 3.0 * t, 3.0];
        assert!(close(&traj.z[k], &z, 1e-8), "t={t}: {:?}", traj.z[k]);
        assert!(close(&traj.v[k], &[2.0 * t, 0.0], 1e-8));
        assert!((traj.margins[k] - 2.0).abs() < 1e-9);
    }
    assert_eq!(measured_differential_weight(&spec, &curve).unwrap(), 10);
    assert!(roundtrip_error(&spec, &curve, &grid).unwrap() <= 1e-6);
}

#[test]
fn rk4_exponential() {
    let st = vec!["z".to_string()];
    let sys = ControlAffineSystem::new(
        VectorField::basis(&st, 0).scale(&Expr::var("z")),
        VectorField::zero(&st),
        VectorField::zero(&st),
        BTreeMap::new(),
        vec![1.0],
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 1e-3).unwrap();
    let traj = integrate_rk4(&sys, &[1.0], |_, _| [0.0, 0.0], &grid).unwrap();
    assert!((traj.last()[0] - std::f64::consts::E).abs() <= 1e-8);
}
