//! Numerical oracles: fixed-step RK4, flat round trips and a
//! finite-difference check of symbolic brackets.

use crate::error::{Error, Result};
use crate::expr::Assignment;
use crate::field::{lie_bracket, ControlAffineSystem, VectorField};
use crate::flat::{parametrize_trajectory, FlatOutputCurve, FlatTrajectory, TimeGrid};
use crate::normal_forms::{build_normal_form, NormalFormSpec};

/// States and inputs on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.x.last().expect("at least the initial state")
    }
}

/// Classical RK4 for `ẋ = f + u1 g1 + u2 g2`; `input(k, h)` is the input
/// at `t0 + k dt + h`, `0 ≤ h ≤ dt`.
pub fn integrate_rk4<F>(sys: &ControlAffineSystem, x0: &[f64], input: F, grid: &TimeGrid) -> Result<Trajectory>
where
    F: Fn(usize, f64) -> [f64; 2],
{
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!("initial state has {} entries, system has {n}", x0.len())));
    }
    let tape = sys.compile()?;
    let rhs = |x: &[f64], u: [f64; 2]| -> Result<Vec<f64>> {
        let out = tape.eval(&sys.tape_inputs(x))?;
        Ok((0..n).map(|i| out[i] + u[0] * out[n + i] + u[1] * out[2 * n + i]).collect())
    };
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    let steps = grid.len() - 1;
    let dt = grid.dt;
    let mut traj = Trajectory {
        t: vec![grid.t0],
        x: vec![x0.to_vec()],
        u: vec![input(0, 0.0)],
    };
    let mut x = x0.to_vec();
    for k in 0..steps {
        let (u0, um, u1) = (input(k, 0.0), input(k, 0.5 * dt), input(k, dt));
        let blow = |_| Error::BlowUp { step: k + 1, t: grid.node(k + 1) };
        let k1 = rhs(&x, u0).map_err(blow)?;
        let k2 = rhs(&axpy(&x, 0.5 * dt, &k1), um).map_err(blow)?;
        let k3 = rhs(&axpy(&x, 0.5 * dt, &k2), um).map_err(blow)?;
        let k4 = rhs(&axpy(&x, dt, &k3), u1).map_err(blow)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: k + 1, t: grid.node(k + 1) });
        }
        traj.t.push(grid.node(k + 1));
        traj.x.push(x.clone());
        traj.u.push(input(k + 1, 0.0));
    }
    Ok(traj)
}

/// Integrates the form from the recovered initial state with the
/// recovered inputs; max-norm distance to the recovered states.
pub fn trajectory_roundtrip_error(spec: &NormalFormSpec, traj: &FlatTrajectory, grid: &TimeGrid) -> Result<f64> {
    let sys = build_normal_form(spec);
    let sim = integrate_rk4(&sys, &traj.z[0], |k, h| traj.input_near(k, h), grid)?;
    Ok(sim
        .x
        .iter()
        .zip(&traj.z)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max))
}

pub fn roundtrip_error(spec: &NormalFormSpec, curve: &FlatOutputCurve, grid: &TimeGrid) -> Result<f64> {
    let traj = parametrize_trajectory(spec, curve, grid)?;
    trajectory_roundtrip_error(spec, &traj, grid)
}

fn numeric_jacobian(x: &VectorField, at: &Assignment, h: f64) -> Result<Vec<Vec<f64>>> {
    let n = x.dim();
    let mut jac = vec![vec![0.0; n]; n];
    for (j, var) in x.state().iter().enumerate() {
        let c = at.get(var).ok_or_else(|| Error::Unassigned(var.clone()))?;
        let plus = x.evaluate(&at.clone().with(var.clone(), c + h))?;
        let minus = x.evaluate(&at.clone().with(var.clone(), c - h))?;
        for i in 0..n {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn richardson_jacobian(x: &VectorField, at: &Assignment, h: f64) -> Result<Vec<Vec<f64>>> {
    let coarse = numeric_jacobian(x, at, h)?;
    let fine = numeric_jacobian(x, at, h / 2.0)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
        .collect())
}

/// Relative deviation of the symbolic `[X, Y]` from the bracket built out
/// of central-difference Jacobians (`h = 1e-5`, one Richardson step).
pub fn fd_bracket_oracle(x: &VectorField, y: &VectorField, at: &Assignment) -> Result<f64> {
    let symbolic = lie_bracket(x, y).evaluate(at)?;
    let (xv, yv) = (x.evaluate(at)?, y.evaluate(at)?);
    let (jx, jy) = (richardson_jacobian(x, at, 1e-5)?, richardson_jacobian(y, at, 1e-5)?);
    let n = x.dim();
    let numeric: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| jy[i][j] * xv[j] - jx[i][j] * yv[j]).sum())
        .collect();
    let scale = symbolic.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let dev = symbolic
        .iter()
        .zip(&numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(dev / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use std::collections::BTreeMap;

    fn scalar(f: Expr) -> ControlAffineSystem {
        let st = vec!["z".to_string()];
        ControlAffineSystem::new(
            VectorField::new(st.clone(), vec![f]).unwrap(),
            VectorField::basis(&st, 0),
            VectorField::zero(&st),
            BTreeMap::new(),
            vec![0.0],
        )
        .unwrap()
    }

    #[test]
    fn unit_input_integrates_exactly() {
        let sys = scalar(Expr::zero());
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let traj = integrate_rk4(&sys, &[0.0], |_, _| [1.0, 0.0], &grid).unwrap();
        assert!((traj.last()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_reports_step() {
        let sys = scalar(Expr::var("z").powi(2));
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let err = integrate_rk4(&sys, &[1.0], |_, _| [0.0, 0.0], &grid).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn constant_fields_have_zero_deviation() {
        let st: Vec<String> = vec!["a".into(), "b".into()];
        let x = VectorField::basis(&st, 0);
        let y = VectorField::basis(&st, 1);
        let at: Assignment = [("a", 0.3), ("b", -0.2)].into_iter().collect();
        assert_eq!(fd_bracket_oracle(&x, &y, &at).unwrap(), 0.0);
    }
}
