//! Two physical systems brought into catalogue form by an explicit
//! change of coordinates and static feedback: an induction motor
//! (reduces to NF'6) and a car with steering dynamics (reduces to NF''9).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::distributions::{SamplePlan, SampleSet};
use crate::error::{Error, Result};
use crate::expr::{parse_expr_with, Expr};
use crate::field::{lie_derivative, ControlAffineSystem, VectorField};
use crate::normal_forms::{build_normal_form, BasePoint, NormalFormSpec, Slot, Variant, STATE};
use crate::prolongation::{apply_static_feedback, FeedbackTransformation};

#[derive(Debug, Clone)]
pub struct WorkedExample {
    pub name: &'static str,
    /// Original dynamics; `v0` is the nominal transformed input.
    pub system: ControlAffineSystem,
    /// `z = Φ(x)`, one expression in the original state per coordinate.
    pub coordinates: Vec<Expr>,
    pub feedback: FeedbackTransformation,
    pub target: NormalFormSpec,
    /// The flat output in original variables.
    pub flat_output: [Expr; 2],
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Parses a fixed formula over the given names.
fn formula(src: &str, known: &[String]) -> Expr {
    parse_expr_with(src, &|n: &str| known.iter().any(|k| k == n))
        .unwrap_or_else(|e| panic!("bad built-in formula `{src}`: {e}"))
}

fn field(state: &[String], known: &[String], components: &[&str]) -> VectorField {
    VectorField::new(state.to_vec(), components.iter().map(|c| formula(c, known)).collect()).expect("five components")
}

impl WorkedExample {
    fn new(
        name: &'static str,
        system: ControlAffineSystem,
        coordinates: Vec<Expr>,
        feedback: FeedbackTransformation,
        target_free: Vec<(Slot, Expr)>,
        target_params: BTreeMap<String, f64>,
        variant: Variant,
        flat_output: [Expr; 2],
    ) -> Result<Self> {
        let at = system.base_assignment();
        let z0: Vec<f64> = coordinates.iter().map(|c| c.evaluate(&at)).collect::<Result<_>>()?;
        let v0 = system.v0.unwrap_or([0.0, 0.0]);
        let base = BasePoint {
            z0: z0.try_into().expect("five coordinates"),
            v0,
            vdot0: system.vdot0,
        };
        let target = NormalFormSpec::normalized(variant, target_free, target_params, base)?;
        let ex = WorkedExample {
            name,
            system,
            coordinates,
            feedback,
            target,
            flat_output,
        };
        let det = ex.coordinate_jacobian_determinant(&ex.system.base)?;
        if det.abs() <= 1e-9 {
            return Err(Error::SingularCoordinates { det: det.abs() });
        }
        ex.feedback.check(&ex.system)?;
        Ok(ex)
    }

    /// `det ∂Φ/∂x` at a point of the original state space.
    pub fn coordinate_jacobian_determinant(&self, point: &[f64]) -> Result<f64> {
        let at = self.system.assignment(point);
        let n = self.coordinates.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, c) in self.coordinates.iter().enumerate() {
            for (j, v) in self.system.state().iter().enumerate() {
                m[(i, j)] = c.differentiate(v).evaluate(&at)?;
            }
        }
        Ok(m.determinant())
    }

    /// `Φ` at a point.
    pub fn transform(&self, point: &[f64]) -> Result<[f64; 5]> {
        let at = self.system.assignment(point);
        let mut z = [0.0; 5];
        for (zi, c) in z.iter_mut().zip(&self.coordinates) {
            *zi = c.evaluate(&at)?;
        }
        Ok(z)
    }

    /// The system after the example's feedback, still in original
    /// coordinates.
    pub fn transformed_system(&self) -> Result<ControlAffineSystem> {
        apply_static_feedback(&self.system, &self.feedback)
    }

    /// True when the target's flat output, written through `Φ`, is
    /// structurally the stated flat output.
    pub fn flat_output_pulls_back(&self) -> Result<bool> {
        let out = self.target.variant().profile()?.flat_output;
        Ok(out.iter().zip(&self.flat_output).all(|(z, phi)| {
            let i = STATE.iter().position(|s| Expr::var(*s) == *z).expect("coordinate output");
            self.coordinates[i] == *phi
        }))
    }
}

/// Largest deviation between `L_F Φ` and `G ∘ Φ` for the transformed
/// fields `F ∈ {f̃, g̃1, g̃2}` and the target fields `G`, over the plan's
/// sample points around the example's base point.
pub fn verify_example_reduction(ex: &WorkedExample, plan: &SamplePlan) -> Result<f64> {
    let sys = ex.transformed_system()?;
    let target = build_normal_form(&ex.target);
    let pushed: Vec<Vec<Expr>> = [&sys.drift, &sys.g1, &sys.g2]
        .iter()
        .map(|f| ex.coordinates.iter().map(|c| lie_derivative(c, f)).collect())
        .collect();
    let targets = [&target.drift, &target.g1, &target.g2];
    let samples = SampleSet::draw(sys.state(), &sys.base_assignment(), plan, |p| {
        ex.transform(&p[..sys.dim()]).is_ok_and(|z| z.iter().all(|v| v.is_finite()))
    })?;
    let mut worst = 0.0f64;
    for i in 0..samples.points.len() {
        let point = &samples.points[i][..sys.dim()];
        let at = sys.assignment(point);
        let z = ex.transform(point)?;
        let zat = ex.target.z_assignment(&z);
        for (lhs, g) in pushed.iter().zip(targets) {
            let rhs = g.evaluate(&zat)?;
            for (l, r) in lhs.iter().zip(rhs) {
                worst = worst.max((l.evaluate(&at)? - r).abs());
            }
        }
    }
    Ok(worst)
}

/// Induction motor in a rotor-flux frame with unit parameters, reduced to
/// NF'6 with flat output `(ω, ρ)`.
pub fn induction_motor_example() -> Result<WorkedExample> {
    let state = names(&["I_d", "I_q", "omega", "psi_d", "rho"]);
    let params: BTreeMap<String, f64> = ["mu", "eta", "M", "n_p", "J", "tau_L"]
        .iter()
        .map(|p| (p.to_string(), 1.0))
        .collect();
    let mut known = state.clone();
    known.extend(params.keys().cloned());
    let e = |s: &str| formula(s, &known);

    let f = field(
        &state,
        &known,
        &[
            "0",
            "0",
            "mu*psi_d*I_q - tau_L/J",
            "-eta*psi_d + eta*M*I_d",
            "n_p*omega + eta*M*I_q/psi_d",
        ],
    );
    let system = ControlAffineSystem::new(
        f.clone(),
        VectorField::basis(&state, 0),
        VectorField::basis(&state, 1),
        params.clone(),
        vec![0.2, 0.5, 0.0, 1.0, 0.0],
    )?
    .with_inputs(Some([1.0, 0.0]), None);

    let z5 = e("n_p*(mu*psi_d*I_q - tau_L/J) - 2*eta^2*M*I_q*(M*I_d - psi_d)/psi_d^2");
    let coordinates = vec![
        e("omega"),
        e("mu*psi_d*I_q - tau_L/J"),
        e("rho"),
        e("n_p*omega + eta*M*I_q/psi_d"),
        z5.clone(),
    ];
    // U_q = α2 + β21 v1 makes ż2 = v1; U_d then makes ż5 = v2
    let alpha2 = e("-(M*I_d - psi_d)*eta*I_q/psi_d");
    let beta21 = e("1/(mu*psi_d)");
    let lf = lie_derivative(&z5, &f);
    let lg1 = lie_derivative(&z5, &system.g1);
    let lg2 = lie_derivative(&z5, &system.g2);
    let feedback = FeedbackTransformation {
        alpha: [(-(&lf) - &alpha2 * &lg2) / &lg1, alpha2],
        beta: [[-(&beta21 * &lg2) / &lg1, Expr::one() / &lg1], [beta21, Expr::zero()]],
    };

    let target_params: BTreeMap<String, f64> =
        ["J", "n_p", "tau_L"].iter().map(|p| (p.to_string(), params[*p])).collect();
    let zk: Vec<String> = STATE.iter().map(|s| s.to_string()).chain(target_params.keys().cloned()).collect();
    let a2 = formula("J*(z4 - n_p*z1)/(J*z2 + tau_L)", &zk);
    WorkedExample::new(
        "motor",
        system,
        coordinates,
        feedback,
        vec![(Slot::A2, a2)],
        target_params,
        Variant::NfPrime6,
        [e("omega"), e("rho")],
    )
}

/// Car kinematics with second-order steering, reduced to NF''9 with flat
/// output `(x, y)`.
pub fn car_steering_example() -> Result<WorkedExample> {
    let state = names(&["x", "y", "theta1", "theta2", "omega2"]);
    let e = |s: &str| formula(s, &state);
    let f = field(&state, &state, &["0", "0", "0", "omega2", "0"]);
    let g1 = field(
        &state,
        &state,
        &[
            "cos(theta2 - theta1)*cos(theta1)",
            "cos(theta2 - theta1)*sin(theta1)",
            "sin(theta2 - theta1)",
            "0",
            "0",
        ],
    );
    let g2 = VectorField::basis(&state, 4);
    let system = ControlAffineSystem::new(f.clone(), g1, g2.clone(), BTreeMap::new(), vec![0.0, 0.0, 0.1, 0.4, 0.2])?
        .with_inputs(Some([1.0, 0.0]), None);

    // z4 is the v1-coefficient of ż3 once u1 = v1 / (cos(θ2−θ1) cos θ1)
    let z4 = e("tan(theta2 - theta1)/cos(theta1)^3");
    let z5 = lie_derivative(&z4, &f);
    let coordinates = vec![e("x"), e("y"), e("tan(theta1)"), z4, z5.clone()];
    let beta11 = e("1/(cos(theta2 - theta1)*cos(theta1))");
    let g1_tilde = system.g1.scale(&beta11);
    let lf = lie_derivative(&z5, &f);
    let lg1 = lie_derivative(&z5, &g1_tilde);
    let lg2 = lie_derivative(&z5, &g2);
    let feedback = FeedbackTransformation {
        alpha: [Expr::zero(), -(&lf) / &lg2],
        beta: [[beta11, Expr::zero()], [-(&lg1) / &lg2, Expr::one() / &lg2]],
    };

    let zk: Vec<String> = STATE.iter().map(|s| s.to_string()).collect();
    let a2 = formula(
        "-z4*(1 + z4^2/(1 + z3^2)^3)*exp(0.5*ln(1 + z3^2)) + 3*z3*z4^2/(1 + z3^2)",
        &zk,
    );
    WorkedExample::new(
        "car",
        system,
        coordinates,
        feedback,
        vec![(Slot::C1, Expr::zero()), (Slot::B1, Expr::zero()), (Slot::A2, a2)],
        BTreeMap::new(),
        Variant::NfDouble9,
        [e("x"), e("y")],
    )
}

pub fn example_by_name(name: &str) -> Result<WorkedExample> {
    match name {
        "motor" => induction_motor_example(),
        "car" => car_steering_example(),
        other => Err(Error::InvalidSpec(format!("unknown example `{other}` (expected motor or car)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motor_reduction_is_exact() {
        let ex = induction_motor_example().unwrap();
        let r = verify_example_reduction(&ex, &SamplePlan::default().with_count(100)).unwrap();
        assert!(r <= 1e-9, "residual {r}");
        assert!(ex.flat_output_pulls_back().unwrap());
    }

    #[test]
    fn car_reduction_is_exact() {
        let ex = car_steering_example().unwrap();
        let r = verify_example_reduction(&ex, &SamplePlan::default().with_count(100)).unwrap();
        assert!(r <= 1e-9, "residual {r}");
        assert!(ex.flat_output_pulls_back().unwrap());
    }

    #[test]
    fn car_first_substitution() {
        // with u1 = v1/(cos(θ2−θ1) cos θ1): ẏ = tan θ1 v1, θ̇1 = tan(θ2−θ1)/cos θ1 v1
        let ex = car_steering_example().unwrap();
        let sys = ex.transformed_system().unwrap();
        let at = sys.assignment(&[0.0, 0.0, 0.3, 0.5, 0.1]);
        let g = sys.g1.evaluate(&at).unwrap();
        assert!((g[1] - 0.3f64.tan()).abs() < 1e-14);
        assert!((g[2] - (0.2f64).tan() / 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn unknown_example() {
        assert!(example_by_name("boat").is_err());
    }
}
