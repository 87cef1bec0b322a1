//! Planned trajectories: states and inputs of a normal form recovered from
//! a flat-output curve.
//!
//! Every quantity at a node is carried as a truncated Taylor series in
//! time, so derivatives of recovered states are exact rather than finite
//! differences. Each nonlinear row is solved for its next state by a
//! Newton iteration on the value, then by a series iteration that fixes
//! one more coefficient per pass.

use std::io::Write;

use crate::error::{Error, Result};
use crate::expr::series::Series;
use crate::expr::{Expr, Number, Tape};
use crate::normal_forms::{Family, NormalFormSpec, Slot, Variant, STATE};

/// Taylor coefficients carried per node.
const JET: usize = 10;
/// Nodes whose solve Jacobian drops below this are flatness singularities.
pub const SINGULAR_MARGIN: f64 = 1e-8;

/// A pair of polynomials `φ1(t), φ2(t)`, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatOutputCurve {
    pub phi: [Vec<f64>; 2],
}

impl FlatOutputCurve {
    pub fn new(phi1: Vec<f64>, phi2: Vec<f64>) -> Result<Self> {
        for (i, p) in [&phi1, &phi2].into_iter().enumerate() {
            if p.is_empty() || p.iter().any(|c| !c.is_finite()) {
                return Err(Error::DegenerateCurve(format!("phi{} has no finite coefficients", i + 1)));
            }
        }
        Ok(FlatOutputCurve { phi: [phi1, phi2] })
    }

    pub fn value(&self, i: usize, t: f64) -> f64 {
        self.phi[i].iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Taylor expansion of `φ_i` around `t`, `len` coefficients.
    pub fn jet(&self, i: usize, t: f64, len: usize) -> Series {
        // repeated synthetic division by (x - t)
        let mut c = self.phi[i].clone();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            if c.is_empty() {
                out.push(0.0);
                continue;
            }
            let mut acc = 0.0;
            let mut quotient = vec![0.0; c.len() - 1];
            for k in (0..c.len()).rev() {
                acc = acc * t + c[k];
                if k > 0 {
                    quotient[k - 1] = acc;
                }
            }
            out.push(acc);
            c = quotient;
        }
        Series::new(out)
    }
}

/// `φ_i, φ̇_i, ..., φ_i^(order)` at `t` for both components.
pub fn curve_derivatives(c: &FlatOutputCurve, t: f64, order: usize) -> [Vec<f64>; 2] {
    [0, 1].map(|i| {
        let j = c.jet(i, t, order + 1);
        (0..=order).map(|k| j.derivative(k)).collect()
    })
}

/// Uniform nodes `t0, t0 + dt, ..., t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t1 > t0) || !dt.is_finite() || !t1.is_finite() {
            return Err(Error::DegenerateCurve(format!(
                "time grid [{t0}, {t1}] with step {dt}"
            )));
        }
        Ok(TimeGrid { t0, t1, dt })
    }

    pub fn len(&self) -> usize {
        ((self.t1 - self.t0) / self.dt).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// One algebraic block: `lhs(z, v1, v̇1) = rhs` solved for `unknowns`.
struct Block {
    unknowns: Vec<usize>,
    /// `k` left-hand sides followed by the `k × k` Jacobian, row-major.
    tape: Tape,
    rhs: Rhs,
}

#[derive(Clone, Copy)]
enum Rhs {
    /// `ż_j` (0-based state index).
    StateDerivative(usize),
    /// `(φ̇2, φ̈2)`.
    OutputDerivatives,
}

/// Compiled recovery scheme for one spec.
pub struct Planner {
    family: Family,
    blocks: Vec<Block>,
    /// `c(z̄4)` for the last state of NF13.
    closing: Option<Tape>,
    params: Vec<f64>,
    guess: [f64; 5],
}

fn tape_vars(spec: &NormalFormSpec) -> Vec<String> {
    let mut v: Vec<String> = STATE.iter().map(|s| s.to_string()).collect();
    v.push("v1".into());
    v.push("w1".into());
    v.extend(spec.parameters().keys().cloned());
    v
}

/// Number of leading states fixed by `φ1` and its derivatives.
fn leading_chain(family: Family) -> usize {
    match family {
        Family::Nf | Family::NfDouble | Family::Nf13 => 1,
        Family::NfPrime => 2,
        Family::Nf7 => 3,
    }
}

impl Planner {
    pub fn new(spec: &NormalFormSpec) -> Result<Self> {
        let family = spec.variant().family();
        let vars = tape_vars(spec);
        let mut blocks = Vec::new();
        let mut closing = None;
        if family == Family::Nf13 {
            let (v1, w1) = (Expr::var("v1"), Expr::var("w1"));
            let zv = |i: usize| Expr::var(STATE[i - 1]);
            let e1 = zv(3) + zv(4) * &v1;
            let e2 = spec.slot(Slot::A)
                + spec.slot(Slot::B) * &v1
                + spec.slot(Slot::C) * v1.powi(2)
                + zv(4) * &w1;
            let mut exprs = vec![e1.clone(), e2.clone()];
            for e in [&e1, &e2] {
                exprs.push(e.differentiate("z3"));
                exprs.push(e.differentiate("z4"));
            }
            blocks.push(Block {
                unknowns: vec![2, 3],
                tape: Tape::compile(&exprs, &vars)?,
                rhs: Rhs::OutputDerivatives,
            });
            closing = Some(Tape::compile(&[spec.slot(Slot::C)], &vars)?);
        } else {
            let first = leading_chain(family) + 1;
            for j in first..5 {
                let row = spec.row(j);
                let d = row.differentiate(STATE[j]);
                blocks.push(Block {
                    unknowns: vec![j],
                    tape: Tape::compile(&[row, d], &vars)?,
                    rhs: Rhs::StateDerivative(j - 1),
                });
            }
        }
        Ok(Planner {
            family,
            blocks,
            closing,
            params: spec.parameters().values().copied().collect(),
            guess: spec.base().z0,
        })
    }

    /// States and inputs at one node, as Taylor series.
    fn node(&self, curve: &FlatOutputCurve, t: f64, guess: &[f64; 5], jets: Option<&[Series; 2]>) -> Result<NodeSolution> {
        let owned;
        let [phi1, phi2] = match jets {
            Some(j) => j,
            None => {
                owned = [curve.jet(0, t, JET), curve.jet(1, t, JET)];
                &owned
            }
        };
        let mut z: [Option<Series>; 5] = Default::default();
        let lead = leading_chain(self.family);
        let mut s = phi1.clone();
        for slot in z.iter_mut().take(lead) {
            *slot = Some(s.clone());
            s = s.deriv();
        }
        let v1 = s;
        let w1 = v1.deriv();
        z[lead] = Some(phi2.clone());

        let mut margin = f64::INFINITY;
        let mut iterations = 0;
        for block in &self.blocks {
            let rhs = match block.rhs {
                Rhs::StateDerivative(j) => vec![z[j].as_ref().expect("solved in order").deriv()],
                Rhs::OutputDerivatives => {
                    let d = phi2.deriv();
                    vec![d.clone(), d.deriv(), w1.clone()]
                }
            };
            let len = rhs
                .iter()
                .chain(z.iter().flatten())
                .chain(std::iter::once(&v1))
                .map(Series::len)
                .min()
                .unwrap();
            let rhs: Vec<Series> = rhs[..block.unknowns.len()].iter().map(|r| r.truncate(len)).collect();
            let (values, m, its) = self.solve_values(block, &z, &v1, &w1, &rhs, guess)?;
            margin = margin.min(m);
            iterations += its;
            if m < SINGULAR_MARGIN {
                return Err(Error::SingularNode { node: 0, t, margin: m });
            }
            let series = self.solve_series(block, &z, &v1, &w1, &rhs, &values, len)?;
            for (idx, s) in block.unknowns.iter().zip(series) {
                z[*idx] = Some(s);
            }
        }
        if let Some(tape) = &self.closing {
            let z4 = z[3].as_ref().expect("solved");
            let len = z4.len() - 1;
            let known: [Series; 5] = std::array::from_fn(|i| z[i].clone().unwrap_or_else(|| Series::constant(0.0, len)));
            let inputs = self.inputs(&known, &v1, &w1, len);
            let c = tape.eval_generic(&inputs, &inputs[0])?.remove(0);
            z[4] = Some(z4.deriv().sub(&c.mul(&v1.truncate(len))));
        }
        let z: [Series; 5] = z.map(|s| s.expect("all states recovered"));
        let v2 = z[4].deriv();
        Ok(NodeSolution {
            z,
            v: [v1, v2],
            margin,
            iterations,
        })
    }

    fn inputs(&self, z: &[Series; 5], v1: &Series, w1: &Series, len: usize) -> Vec<Series> {
        let mut inputs: Vec<Series> = z.iter().map(|s| s.truncate(len)).collect();
        inputs.push(v1.truncate(len));
        inputs.push(w1.truncate(len));
        inputs.extend(self.params.iter().map(|p| Series::constant(*p, len)));
        inputs
    }

    fn point(z: &[Option<Series>; 5], v1: &Series, w1: &Series, params: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = z.iter().map(|s| s.as_ref().map_or(0.0, Series::value)).collect();
        p.push(v1.value());
        p.push(w1.value());
        p.extend_from_slice(params);
        p
    }

    /// Damped Newton on the node values; returns the values, `|det J|` at
    /// the solution and the iteration count.
    fn solve_values(
        &self,
        block: &Block,
        z: &[Option<Series>; 5],
        v1: &Series,
        w1: &Series,
        rhs: &[Series],
        guess: &[f64; 5],
    ) -> Result<(Vec<f64>, f64, usize)> {
        let k = block.unknowns.len();
        let target: Vec<f64> = rhs.iter().map(Series::value).collect();
        let mut point = Self::point(z, v1, w1, &self.params);
        let residual = |point: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let out = block.tape.eval(point)?;
            let r: Vec<f64> = (0..k).map(|i| out[i] - target[i]).collect();
            Ok((r, out[k..].to_vec()))
        };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let det = |j: &[f64]| if k == 1 { j[0] } else { j[0] * j[3] - j[1] * j[2] };
        let scale = 1.0 + norm(&target);

        let starts = [guess.to_vec(), self.guess.to_vec(), vec![0.0; 5], vec![1.0; 5], vec![-1.0; 5]];
        let mut last_det = 0.0;
        let mut total = 0;
        for start in starts {
            for &u in &block.unknowns {
                point[u] = start[u];
            }
            let mut converged = false;
            for _ in 0..60 {
                total += 1;
                let (r, jac) = match residual(&point) {
                    Ok(x) => x,
                    Err(_) => break,
                };
                let d = det(&jac);
                last_det = d;
                if norm(&r) <= 1e-14 * scale {
                    converged = true;
                    break;
                }
                if d.abs() < 1e-300 {
                    break;
                }
                let step: Vec<f64> = if k == 1 {
                    vec![r[0] / d]
                } else {
                    vec![(jac[3] * r[0] - jac[1] * r[1]) / d, (jac[0] * r[1] - jac[2] * r[0]) / d]
                };
                let f0 = norm(&r);
                let mut lambda = 1.0;
                let mut moved = false;
                while lambda > 1e-6 {
                    let mut trial = point.clone();
                    for (u, s) in block.unknowns.iter().zip(&step) {
                        trial[*u] -= lambda * s;
                    }
                    if let Ok((rt, _)) = residual(&trial) {
                        if norm(&rt) < (1.0 - 0.25 * lambda) * f0 || norm(&rt) <= 1e-14 * scale {
                            point = trial;
                            moved = true;
                            break;
                        }
                    }
                    lambda *= 0.5;
                }
                if !moved {
                    // stagnation at roundoff level still counts as converged
                    converged = f0 <= 1e-10 * scale;
                    break;
                }
            }
            if converged {
                let (_, jac) = residual(&point)?;
                let values = block.unknowns.iter().map(|u| point[*u]).collect();
                return Ok((values, det(&jac).abs(), total));
            }
        }
        if last_det.abs() < SINGULAR_MARGIN {
            return Err(Error::SingularNode {
                node: 0,
                t: 0.0,
                margin: last_det.abs(),
            });
        }
        Err(Error::NewtonFailure { node: 0, t: 0.0 })
    }

    /// Series iteration `u ← u − J0⁻¹ (lhs(u) − rhs)`; pass `m` fixes
    /// coefficient `m`.
    #[allow(clippy::too_many_arguments)]
    fn solve_series(
        &self,
        block: &Block,
        z: &[Option<Series>; 5],
        v1: &Series,
        w1: &Series,
        rhs: &[Series],
        values: &[f64],
        len: usize,
    ) -> Result<Vec<Series>> {
        let k = block.unknowns.len();
        let mut full: [Series; 5] = std::array::from_fn(|i| match &z[i] {
            Some(s) => s.truncate(len),
            None => Series::constant(0.0, len),
        });
        for (u, v) in block.unknowns.iter().zip(values) {
            full[*u] = Series::constant(*v, len);
        }
        let mut inputs = self.inputs(&full, v1, w1, len);
        let point: Vec<f64> = inputs.iter().map(Series::value).collect();
        let jac = block.tape.eval(&point)?[k..].to_vec();
        let inv: Vec<f64> = if k == 1 {
            vec![1.0 / jac[0]]
        } else {
            let d = jac[0] * jac[3] - jac[1] * jac[2];
            vec![jac[3] / d, -jac[1] / d, -jac[2] / d, jac[0] / d]
        };
        for _ in 1..len {
            let out = block.tape.eval_generic(&inputs, &inputs[0])?;
            let r: Vec<Series> = (0..k).map(|i| out[i].sub(&rhs[i])).collect();
            for (row, u) in block.unknowns.iter().enumerate() {
                let mut corr = r[0].mul(&Series::constant(inv[row * k], len));
                for (col, ri) in r.iter().enumerate().skip(1) {
                    corr = corr.add(&ri.mul(&Series::constant(inv[row * k + col], len)));
                }
                inputs[*u] = inputs[*u].sub(&corr);
            }
        }
        Ok(block.unknowns.iter().map(|u| inputs[*u].clone()).collect())
    }
}

struct NodeSolution {
    z: [Series; 5],
    v: [Series; 2],
    margin: f64,
    iterations: usize,
}

/// Recovered states and inputs along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTrajectory {
    pub variant: Variant,
    pub t: Vec<f64>,
    pub z: Vec<[f64; 5]>,
    pub v: Vec<[f64; 2]>,
    /// Smallest solve-Jacobian modulus at each node.
    pub margins: Vec<f64>,
    pub newton_iterations: Vec<usize>,
    /// Highest derivative of `φ1`, `φ2` that the states or inputs use.
    pub orders: (usize, usize),
    /// Taylor coefficients of `v` at each node.
    v_series: Vec<[Series; 2]>,
}

impl FlatTrajectory {
    /// `2 + s1 + s2`: the number of output derivatives (counting order
    /// zero) the parametrization consumes.
    pub fn differential_weight(&self) -> usize {
        2 + self.orders.0 + self.orders.1
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Input at `t_k + h`, from the Taylor expansion at node `k`.
    pub fn input_near(&self, k: usize, h: f64) -> [f64; 2] {
        let s = &self.v_series[k];
        [s[0].eval_at(h), s[1].eval_at(h)]
    }

    /// Writes `t,z1..z5,v1,v2,margin` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["t", "z1", "z2", "z3", "z4", "z5", "v1", "v2", "margin"])
            .map_err(csv_err)?;
        for k in 0..self.t.len() {
            let mut row = vec![self.t[k]];
            row.extend_from_slice(&self.z[k]);
            row.extend_from_slice(&self.v[k]);
            row.push(self.margins[k]);
            w.write_record(row.iter().map(|x| format!("{x:.16e}"))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn values(sol: &NodeSolution) -> Vec<f64> {
    sol.z
        .iter()
        .chain(sol.v.iter())
        .map(Series::value)
        .collect()
}

/// Recovers `z(t)`, `v(t)` of the normal form along `φ`, node by node.
/// Fails with [`Error::SingularNode`] where the solve Jacobian is below
/// [`SINGULAR_MARGIN`].
pub fn parametrize_trajectory(spec: &NormalFormSpec, curve: &FlatOutputCurve, grid: &TimeGrid) -> Result<FlatTrajectory> {
    let planner = Planner::new(spec)?;
    let n = grid.len();
    let mut traj = FlatTrajectory {
        variant: spec.variant(),
        t: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        margins: Vec::with_capacity(n),
        newton_iterations: Vec::with_capacity(n),
        orders: (0, 0),
        v_series: Vec::with_capacity(n),
    };
    let mut guess = spec.base().z0;
    for k in 0..n {
        let t = grid.node(k);
        let sol = planner.node(curve, t, &guess, None).map_err(|e| locate(e, k, t))?;
        // next guess: this node's expansion one step ahead
        for (g, s) in guess.iter_mut().zip(&sol.z) {
            *g = s.eval_at(grid.dt);
        }
        traj.t.push(t);
        traj.z.push(sol.z.each_ref().map(Series::value));
        traj.v.push(sol.v.each_ref().map(Series::value));
        traj.margins.push(sol.margin);
        traj.newton_iterations.push(sol.iterations);
        traj.v_series.push(sol.v);
    }
    let probe = (n - 1) * 3 / 7;
    traj.orders = measured_orders(&planner, curve, grid.node(probe), &traj.z[probe])?;
    Ok(traj)
}

/// `2 + s1 + s2` for the curve, probed on `[0, 1]`.
pub fn measured_differential_weight(spec: &NormalFormSpec, curve: &FlatOutputCurve) -> Result<usize> {
    let traj = parametrize_trajectory(spec, curve, &TimeGrid::new(0.0, 1.0, 0.01)?)?;
    Ok(traj.differential_weight())
}

fn locate(e: Error, node: usize, t: f64) -> Error {
    match e {
        Error::SingularNode { margin, .. } => Error::SingularNode { node, t, margin },
        Error::NewtonFailure { .. } => Error::NewtonFailure { node, t },
        other => other,
    }
}

/// Highest jet coefficient of each output component whose perturbation
/// moves the states or inputs at `t`.
fn measured_orders(planner: &Planner, curve: &FlatOutputCurve, t: f64, z: &[f64; 5]) -> Result<(usize, usize)> {
    let jets = [curve.jet(0, t, JET), curve.jet(1, t, JET)];
    let reference = values(&planner.node(curve, t, z, Some(&jets))?);
    let mut orders = [0usize; 2];
    for (i, order) in orders.iter_mut().enumerate() {
        for k in 0..JET {
            let mut perturbed = jets.clone();
            perturbed[i].coeffs_mut()[k] += 1e-3;
            let moved = match planner.node(curve, t, z, Some(&perturbed)) {
                Ok(sol) => values(&sol)
                    .iter()
                    .zip(&reference)
                    .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs())),
                Err(_) => true,
            };
            if moved {
                *order = k;
            }
        }
    }
    Ok((orders[0], orders[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_forms::BasePoint;
    use std::collections::BTreeMap;

    #[test]
    fn jets_of_a_cubic() {
        let c = FlatOutputCurve::new(vec![1.0, 2.0, 0.0, 1.0], vec![0.0]).unwrap();
        // 1 + 2t + t^3 at t = 2: value 13, derivative 14, second 12, third 6
        let j = c.jet(0, 2.0, 5);
        assert_eq!(j.coeffs(), &[13.0, 14.0, 6.0, 1.0, 0.0]);
    }

    #[test]
    fn derivative_table() {
        let c = FlatOutputCurve::new(vec![0.0, 0.0, 0.0, 1.0], vec![5.0]).unwrap();
        let [d1, d2] = curve_derivatives(&c, 2.0, 3);
        assert_eq!(d1, vec![8.0, 12.0, 12.0, 6.0]);
        assert_eq!(d2, vec![5.0, 0.0, 0.0, 0.0]);
        let [_, d2] = curve_derivatives(&c, 2.0, 5);
        assert!(d2[1..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn grid_counts_nodes() {
        let g = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!(TimeGrid::new(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn brunovsky_chain() {
        let spec = NormalFormSpec::normalized(
            Variant::Nf1,
            [],
            BTreeMap::new(),
            BasePoint::new([0.0; 5], [1.0, 0.0]),
        )
        .unwrap();
        let curve = FlatOutputCurve::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let traj = parametrize_trajectory(&spec, &curve, &TimeGrid::new(0.0, 1.0, 0.25).unwrap()).unwrap();
        let t = 0.5;
        let expected = [t, t.powi(4), 4.0 * t.powi(3), 12.0 * t * t, 24.0 * t];
        for (a, b) in traj.z[2].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((traj.v[2][1] - 24.0).abs() < 1e-12);
        assert_eq!(traj.orders, (1, 4));
        assert_eq!(traj.differential_weight(), 7);
    }
}
