//! Static feedback, prolongation of the first control, and differential
//! difference certificates.

use crate::distributions::SamplePlan;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{ControlAffineSystem, VectorField};
use crate::linearizability::{static_feedback_linearizable, LinearizabilityReport};

/// `u = α(x) + β(x) ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackTransformation {
    pub alpha: [Expr; 2],
    pub beta: [[Expr; 2]; 2],
}

impl FeedbackTransformation {
    pub fn identity() -> Self {
        FeedbackTransformation {
            alpha: [Expr::zero(), Expr::zero()],
            beta: [[Expr::one(), Expr::zero()], [Expr::zero(), Expr::one()]],
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn determinant(&self) -> Expr {
        &self.beta[0][0] * &self.beta[1][1] - &self.beta[0][1] * &self.beta[1][0]
    }

    /// Checks `|det β| > 1e-9` at the system's base point.
    pub fn check(&self, sys: &ControlAffineSystem) -> Result<()> {
        let det = self.determinant().evaluate(&sys.base_assignment())?;
        if det.abs() > 1e-9 {
            Ok(())
        } else {
            Err(Error::SingularFeedback { det: det.abs() })
        }
    }
}

/// `f̃ = f + g α`, `g̃ = g β`, in the same coordinates.
pub fn apply_static_feedback(sys: &ControlAffineSystem, t: &FeedbackTransformation) -> Result<ControlAffineSystem> {
    t.check(sys)?;
    if t.is_identity() {
        return Ok(sys.clone());
    }
    let combine = |c1: &Expr, c2: &Expr| sys.g1.scale(c1).add(&sys.g2.scale(c2));
    let drift = sys.drift.add(&combine(&t.alpha[0], &t.alpha[1]));
    let g1 = combine(&t.beta[0][0], &t.beta[1][0]);
    let g2 = combine(&t.beta[0][1], &t.beta[1][1]);
    Ok(ControlAffineSystem {
        drift,
        g1,
        g2,
        ..sys.clone()
    })
}

/// The system with its first control replaced by the last state of a
/// `p`-integrator chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedSystem {
    pub base: ControlAffineSystem,
    pub p: usize,
    pub chain: Vec<String>,
    pub augmented: ControlAffineSystem,
}

fn chain_names(state: &[String], parameters: &[&String], p: usize) -> Vec<String> {
    (1..=p)
        .map(|i| {
            let mut name = format!("y{i}");
            while state.contains(&name) || parameters.contains(&&name) {
                name.insert(0, '_');
            }
            name
        })
        .collect()
}

/// `ẋ = f + y1 g1 + v2 g2`, `ẏ_i = y_{i+1}`, `ẏ_p = v1`. The chain starts
/// at `y1 = v10`, `y2 = v̇10` (when known), and zero beyond.
pub fn prolong_first_control(sys: &ControlAffineSystem, p: usize) -> ProlongedSystem {
    if p == 0 {
        return ProlongedSystem {
            base: sys.clone(),
            p,
            chain: Vec::new(),
            augmented: sys.clone(),
        };
    }
    let params: Vec<&String> = sys.parameters.keys().collect();
    let chain = chain_names(sys.state(), &params, p);
    let y1 = Expr::var(chain[0].clone());
    let mut chain_drift: Vec<Expr> = chain[1..].iter().map(|n| Expr::var(n.clone())).collect();
    chain_drift.push(Expr::zero());
    let drift = sys.drift.add(&sys.g1.scale(&y1)).extend(&chain, chain_drift);
    let n = sys.dim();
    let mut g1_components = vec![Expr::zero(); n + p];
    g1_components[n + p - 1] = Expr::one();
    let g1 = VectorField::new(drift.state().to_vec(), g1_components).expect("dimensions agree");
    let g2 = sys.g2.extend(&chain, vec![Expr::zero(); p]);

    let mut base = sys.base.clone();
    let v10 = sys.v0.map(|v| v[0]).unwrap_or(0.0);
    let vdot10 = sys.vdot0.map(|v| v[0]).unwrap_or(0.0);
    for i in 0..p {
        base.push(match i {
            0 => v10,
            1 => vdot10,
            _ => 0.0,
        });
    }
    let augmented = ControlAffineSystem {
        parameters: sys.parameters.clone(),
        drift,
        g1,
        g2,
        base,
        v0: None,
        vdot0: None,
    };
    ProlongedSystem {
        base: sys.clone(),
        p,
        chain,
        augmented,
    }
}

/// Whether the linearizing output was shown to depend on the state only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputDependence {
    /// `p ≤ 2`: always the case.
    Automatic,
    /// `p = 3` on a system outside the catalogue: not verified here.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdiffCertificate {
    pub p: usize,
    pub feedback: FeedbackTransformation,
    pub report: LinearizabilityReport,
    /// Reports for `p' = 0 .. p-1`, all non-linearizable.
    pub failures: Vec<LinearizabilityReport>,
    pub output_dependence: OutputDependence,
}

/// Smallest `p ≤ max_p` for which the `p`-fold prolongation of the first
/// transformed control passes the linearizability test.
pub fn ddiff_certificate(
    sys: &ControlAffineSystem,
    t: &FeedbackTransformation,
    plan: &SamplePlan,
    max_p: usize,
) -> Result<Option<DdiffCertificate>> {
    let transformed = apply_static_feedback(sys, t)?;
    let mut failures = Vec::new();
    for p in 0..=max_p {
        let prolonged = prolong_first_control(&transformed, p);
        let report = static_feedback_linearizable(&prolonged.augmented, plan)?;
        if report.linearizable {
            return Ok(Some(DdiffCertificate {
                p,
                feedback: t.clone(),
                report,
                failures,
                output_dependence: if p <= 2 {
                    OutputDependence::Automatic
                } else {
                    OutputDependence::Unchecked
                },
            }));
        }
        failures.push(report);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use std::collections::BTreeMap;

    fn sample_system() -> ControlAffineSystem {
        let st: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let f = |c: &[&str]| {
            VectorField::new(st.clone(), c.iter().map(|s| parse_expr(s, &st).unwrap()).collect()).unwrap()
        };
        ControlAffineSystem::new(
            f(&["b", "c*a", "0"]),
            f(&["0", "1", "a"]),
            f(&["0", "0", "1"]),
            BTreeMap::new(),
            vec![0.1, 0.2, 0.3],
        )
        .unwrap()
        .with_inputs(Some([2.0, 0.0]), Some([0.5, 0.0]))
    }

    #[test]
    fn identity_feedback_is_a_no_op() {
        let s = sample_system();
        assert_eq!(apply_static_feedback(&s, &FeedbackTransformation::identity()).unwrap(), s);
    }

    #[test]
    fn permutation_swaps_controls() {
        let s = sample_system();
        let t = FeedbackTransformation {
            alpha: [Expr::zero(), Expr::zero()],
            beta: [[Expr::zero(), Expr::one()], [Expr::one(), Expr::zero()]],
        };
        let out = apply_static_feedback(&s, &t).unwrap();
        assert_eq!(out.g1, s.g2);
        assert_eq!(out.g2, s.g1);
    }

    #[test]
    fn singular_feedback_rejected() {
        let s = sample_system();
        let t = FeedbackTransformation {
            alpha: [Expr::zero(), Expr::zero()],
            beta: [[Expr::one(), Expr::one()], [Expr::one(), Expr::one()]],
        };
        assert!(matches!(apply_static_feedback(&s, &t), Err(Error::SingularFeedback { .. })));
    }

    #[test]
    fn prolongation_dimensions_and_base() {
        let s = sample_system();
        assert_eq!(prolong_first_control(&s, 0).augmented, s);
        let p1 = prolong_first_control(&s, 1);
        assert_eq!(p1.augmented.dim(), 4);
        assert_eq!(p1.augmented.g1, VectorField::basis(p1.augmented.state(), 3));
        assert_eq!(p1.augmented.base, vec![0.1, 0.2, 0.3, 2.0]);
        let p3 = prolong_first_control(&s, 3);
        assert_eq!(p3.augmented.dim(), 6);
        assert_eq!(p3.augmented.base[3..], [2.0, 0.5, 0.0]);
        assert_eq!(p3.chain, vec!["y1", "y2", "y3"]);
    }

    #[test]
    fn prolonged_drift_carries_first_control() {
        let s = sample_system();
        let p = prolong_first_control(&s, 2);
        let at = p.augmented.assignment(&[0.1, 0.2, 0.3, 1.5, 0.7]);
        let f = p.augmented.drift.evaluate(&at).unwrap();
        // (b, c a + y1, a y1, y2, 0)
        let expected = [0.2, 0.3 * 0.1 + 1.5, 0.1 * 1.5, 0.7, 0.0];
        for (a, b) in f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_names_avoid_collisions() {
        let names = chain_names(&["y1".to_string()], &[], 2);
        assert_eq!(names, vec!["_y1", "y2"]);
    }
}
