//! Vector fields, Lie brackets and control-affine systems.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Assignment, Expr, Tape};

/// A vector field on a named state space, one expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    state: Vec<String>,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(state: Vec<String>, components: Vec<Expr>) -> Result<Self> {
        if state.len() != components.len() {
            return Err(Error::Dimension(format!(
                "{} components for a {}-dimensional state",
                components.len(),
                state.len()
            )));
        }
        Ok(VectorField { state, components })
    }

    pub fn zero(state: &[String]) -> Self {
        VectorField {
            state: state.to_vec(),
            components: vec![Expr::zero(); state.len()],
        }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn basis(state: &[String], i: usize) -> Self {
        let mut f = Self::zero(state);
        f.components[i] = Expr::one();
        f
    }

    pub fn state(&self) -> &[String] {
        &self.state
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    pub fn scale(&self, k: &Expr) -> Self {
        VectorField {
            state: self.state.clone(),
            components: self.components.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        debug_assert_eq!(self.state, other.state);
        VectorField {
            state: self.state.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Appends coordinates (with the given components) to the state.
    pub fn extend(&self, names: &[String], extra: Vec<Expr>) -> Self {
        let mut state = self.state.clone();
        state.extend(names.iter().cloned());
        let mut components = self.components.clone();
        components.extend(extra);
        VectorField { state, components }
    }

    /// Evaluates every component at a point.
    pub fn evaluate(&self, at: &Assignment) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(at)).collect()
    }

    /// Symbolic Jacobian, row `i` holding `∂X_i/∂x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        self.components
            .iter()
            .map(|c| self.state.iter().map(|v| c.differentiate(v)).collect())
            .collect()
    }
}

/// `[X, Y] = (∂Y/∂x) X − (∂X/∂x) Y`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    assert_eq!(x.state, y.state, "bracket of fields on different states");
    let components = (0..x.dim())
        .map(|i| {
            Expr::sum(x.state.iter().enumerate().map(|(j, v)| {
                let dy = y.components[i].differentiate(v);
                let dx = x.components[i].differentiate(v);
                &dy * &x.components[j] - &dx * &y.components[j]
            }))
        })
        .collect();
    VectorField {
        state: x.state.clone(),
        components,
    }
}

/// `L_X h = Σ (∂h/∂x_i) X_i`.
pub fn lie_derivative(h: &Expr, x: &VectorField) -> Expr {
    Expr::sum(
        x.state
            .iter()
            .zip(&x.components)
            .map(|(v, xi)| h.differentiate(v) * xi),
    )
}

/// `ẋ = f(x) + u1 g1(x) + u2 g2(x)` together with a base point and the
/// nominal (transformed) input used when the system is prolonged.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAffineSystem {
    pub parameters: BTreeMap<String, f64>,
    pub drift: VectorField,
    pub g1: VectorField,
    pub g2: VectorField,
    pub base: Vec<f64>,
    pub v0: Option<[f64; 2]>,
    pub vdot0: Option<[f64; 2]>,
}

impl ControlAffineSystem {
    pub fn new(
        drift: VectorField,
        g1: VectorField,
        g2: VectorField,
        parameters: BTreeMap<String, f64>,
        base: Vec<f64>,
    ) -> Result<Self> {
        let sys = ControlAffineSystem {
            parameters,
            drift,
            g1,
            g2,
            base,
            v0: None,
            vdot0: None,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn with_inputs(mut self, v0: Option<[f64; 2]>, vdot0: Option<[f64; 2]>) -> Self {
        self.v0 = v0;
        self.vdot0 = vdot0;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.drift.dim();
        if self.g1.state != self.drift.state || self.g2.state != self.drift.state {
            return Err(Error::Dimension("fields live on different states".into()));
        }
        if self.base.len() != n {
            return Err(Error::Dimension(format!(
                "base point has {} entries, state has {n}",
                self.base.len()
            )));
        }
        for name in self.state() {
            if self.parameters.contains_key(name) {
                return Err(Error::Dimension(format!("`{name}` is both state and parameter")));
            }
        }
        for field in [&self.drift, &self.g1, &self.g2] {
            for c in field.components() {
                for v in c.free_vars() {
                    if !self.state().contains(&v) && !self.parameters.contains_key(&v) {
                        return Err(Error::Unassigned(v));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn state(&self) -> &[String] {
        self.drift.state()
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    /// Variable order used by compiled tapes: state, then parameters.
    pub fn tape_vars(&self) -> Vec<String> {
        let mut v = self.state().to_vec();
        v.extend(self.parameters.keys().cloned());
        v
    }

    /// Tape inputs for a state point.
    pub fn tape_inputs(&self, point: &[f64]) -> Vec<f64> {
        let mut v = point.to_vec();
        v.extend(self.parameters.values().copied());
        v
    }

    pub fn assignment(&self, point: &[f64]) -> Assignment {
        let mut a: Assignment = self
            .state()
            .iter()
            .cloned()
            .zip(point.iter().copied())
            .collect();
        a.extend(self.parameters.iter().map(|(k, v)| (k.clone(), *v)));
        a
    }

    pub fn base_assignment(&self) -> Assignment {
        self.assignment(&self.base)
    }

    /// Compiles `f, g1, g2` into one tape with `3n` outputs.
    pub fn compile(&self) -> Result<Tape> {
        let mut exprs = self.drift.components().to_vec();
        exprs.extend_from_slice(self.g1.components());
        exprs.extend_from_slice(self.g2.components());
        Tape::compile(&exprs, &self.tape_vars())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bracket_of_translation_and_shear() {
        let state = names(&["z1", "z2"]);
        let x = VectorField::new(state.clone(), vec![Expr::one(), Expr::zero()]).unwrap();
        let y = VectorField::new(state, vec![Expr::zero(), Expr::var("z1")]).unwrap();
        let b = lie_bracket(&x, &y);
        assert_eq!(b.components(), &[Expr::zero(), Expr::one()]);
    }

    #[test]
    fn constant_fields_commute() {
        let state = names(&["z1", "z2", "z3", "z4", "z5"]);
        let x = VectorField::basis(&state, 0);
        let y = VectorField::basis(&state, 4);
        let b = lie_bracket(&x, &y);
        assert!(b.components().iter().all(Expr::is_zero));
    }

    #[test]
    fn lie_derivative_of_constant_vanishes() {
        let state = names(&["a", "b"]);
        let x = VectorField::new(
            state.clone(),
            vec![parse_expr("a*b", &state).unwrap(), Expr::var("a")],
        )
        .unwrap();
        assert!(lie_derivative(&Expr::constant(3.0), &x).is_zero());
    }

    #[test]
    fn system_rejects_foreign_variables() {
        let state = names(&["z1"]);
        let f = VectorField::new(state.clone(), vec![Expr::var("k")]).unwrap();
        let g = VectorField::basis(&state, 0);
        let err = ControlAffineSystem::new(f, g.clone(), g, BTreeMap::new(), vec![0.0]);
        assert_eq!(err.unwrap_err(), Error::Unassigned("k".into()));
    }
}
