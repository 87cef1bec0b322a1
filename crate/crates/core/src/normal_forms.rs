//! The normal-form catalogue for x-flat two-input systems on R^5.
//!
//! Every form is `ż = f(z) + v1 g1(z) + v2 ∂/∂z5`. The families differ in
//! the leading chain carrying `v1` and in which rows are nonlinear:
//!
//! | family | rows                                                             |
//! |--------|------------------------------------------------------------------|
//! | NF     | `ż1 = v1, ż2 = z3, ż3 = b1 + b2 v1, ż4 = a1 + a2 v1`             |
//! | NF'    | `ż1 = z2, ż2 = v1, ż3 = b1 + b2 v1, ż4 = a1 + a2 v1`             |
//! | NF7    | `ż1 = z2, ż2 = z3, ż3 = v1, ż4 = a1 + (z5 − z50) v1`             |
//! | NF''   | `ż1 = v1, ż2 = c1 + c2 v1, ż3 = b1 + b2 v1, ż4 = a1 + a2 v1`     |
//! | NF13   | `ż1 = v1, ż2 = z3 + z4 v1, ż3 = a + (b − z5) v1, ż4 = z5 + c v1` |

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::SamplePlan;
use crate::error::{Error, Result};
use crate::expr::{Assignment, Expr};
use crate::field::{ControlAffineSystem, VectorField};
use crate::linearizability::{static_feedback_linearizable, LinearizabilityReport};
use crate::prolongation::prolong_first_control;

pub const STATE: [&str; 5] = ["z1", "z2", "z3", "z4", "z5"];

pub fn state_names() -> Vec<String> {
    STATE.iter().map(|s| s.to_string()).collect()
}

fn z(i: usize) -> Expr {
    Expr::var(STATE[i - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "NF")]
    Nf,
    #[serde(rename = "NF'")]
    NfPrime,
    #[serde(rename = "NF7")]
    Nf7,
    #[serde(rename = "NF''")]
    NfDouble,
    #[serde(rename = "NF13")]
    Nf13,
    #[serde(rename = "NF1")]
    Nf1,
    #[serde(rename = "NF2")]
    Nf2,
    #[serde(rename = "NF3")]
    Nf3,
    #[serde(rename = "NF4")]
    Nf4,
    #[serde(rename = "NF5")]
    Nf5,
    #[serde(rename = "NF'1")]
    NfPrime1,
    #[serde(rename = "NF'2")]
    NfPrime2,
    #[serde(rename = "NF'3")]
    NfPrime3,
    #[serde(rename = "NF'4")]
    NfPrime4,
    #[serde(rename = "NF'5")]
    NfPrime5,
    #[serde(rename = "NF'6")]
    NfPrime6,
    #[serde(rename = "NF''8")]
    NfDouble8,
    #[serde(rename = "NF''9")]
    NfDouble9,
    #[serde(rename = "NF''10")]
    NfDouble10,
    #[serde(rename = "NF''11")]
    NfDouble11,
    #[serde(rename = "NF''12")]
    NfDouble12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Nf,
    NfPrime,
    Nf7,
    NfDouble,
    Nf13,
}

impl Variant {
    /// Every catalogue row (forms with fixed normalizations).
    pub const SPECIALIZED: [Variant; 18] = [
        Variant::Nf1,
        Variant::Nf2,
        Variant::Nf3,
        Variant::Nf4,
        Variant::Nf5,
        Variant::NfPrime1,
        Variant::NfPrime2,
        Variant::NfPrime3,
        Variant::NfPrime4,
        Variant::NfPrime5,
        Variant::NfPrime6,
        Variant::Nf7,
        Variant::NfDouble8,
        Variant::NfDouble9,
        Variant::NfDouble10,
        Variant::NfDouble11,
        Variant::NfDouble12,
        Variant::Nf13,
    ];

    pub const GENERIC: [Variant; 3] = [Variant::Nf, Variant::NfPrime, Variant::NfDouble];

    pub fn tag(self) -> &'static str {
        use Variant::*;
        match self {
            Nf => "NF",
            NfPrime => "NF'",
            Nf7 => "NF7",
            NfDouble => "NF''",
            Nf13 => "NF13",
            Nf1 => "NF1",
            Nf2 => "NF2",
            Nf3 => "NF3",
            Nf4 => "NF4",
            Nf5 => "NF5",
            NfPrime1 => "NF'1",
            NfPrime2 => "NF'2",
            NfPrime3 => "NF'3",
            NfPrime4 => "NF'4",
            NfPrime5 => "NF'5",
            NfPrime6 => "NF'6",
            NfDouble8 => "NF''8",
            NfDouble9 => "NF''9",
            NfDouble10 => "NF''10",
            NfDouble11 => "NF''11",
            NfDouble12 => "NF''12",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Variant> {
        Variant::SPECIALIZED
            .iter()
            .chain(Variant::GENERIC.iter())
            .copied()
            .find(|v| v.tag() == tag)
    }

    pub fn family(self) -> Family {
        use Variant::*;
        match self {
            Nf | Nf1 | Nf2 | Nf3 | Nf4 | Nf5 => Family::Nf,
            NfPrime | NfPrime1 | NfPrime2 | NfPrime3 | NfPrime4 | NfPrime5 | NfPrime6 => Family::NfPrime,
            Nf7 => Family::Nf7,
            NfDouble | NfDouble8 | NfDouble9 | NfDouble10 | NfDouble11 | NfDouble12 => Family::NfDouble,
            Nf13 => Family::Nf13,
        }
    }

    pub fn is_generic(self) -> bool {
        Variant::GENERIC.contains(&self)
    }

    /// Number of state variables each slot may depend on, or `None` when
    /// the slot does not belong to this variant.
    fn scope(self, slot: Slot) -> Option<usize> {
        use Slot::*;
        use Variant::*;
        match (self.family(), slot) {
            (Family::Nf13, A | B | C) => Some(4),
            (Family::Nf13, _) => None,
            (_, A | B | C) => None,
            (Family::Nf | Family::NfPrime | Family::Nf7, C1 | C2) => None,
            (Family::Nf7, B1 | B2) => None,
            (_, C1 | C2) => Some(3),
            (_, B1 | B2) => Some(4),
            (_, A1) => Some(5),
            (_, A2) => match self {
                Nf4 | NfPrime4 | Nf5 | NfPrime5 | NfPrime6 | NfDouble9 | NfDouble10 | NfDouble11
                | NfDouble12 => Some(4),
                _ => Some(5),
            },
        }
    }

    /// Table-mandated normalization of a slot, if any.
    fn fixing(self, slot: Slot, z0: &[f64; 5]) -> Option<Expr> {
        use Slot::*;
        use Variant::*;
        let zero = Expr::zero();
        let shifted = |i: usize| z(i) - z0[i - 1];
        let fix = match (self, slot) {
            (Nf1 | NfPrime1, B1) => z(4),
            (Nf1 | NfPrime1, B2) => zero,
            (Nf1 | NfPrime1, A1) => z(5),
            (Nf1 | NfPrime1, A2) => zero,
            (Nf2 | NfPrime2 | NfPrime6, B1) => z(4),
            (Nf2 | NfPrime2 | NfPrime6, B2) => zero,
            (Nf2 | NfPrime2 | Nf3 | NfPrime3, A2) => z(5),
            (Nf3 | Nf4, B2) => z(4),
            (NfPrime3 | NfPrime4, B2) => shifted(4),
            (Nf4 | NfPrime4 | Nf5 | NfPrime5 | NfPrime6, A1) => z(5),
            (Nf5 | NfPrime5, B1) => z(4),
            (Nf7, A2) => shifted(5),
            (NfDouble8 | NfDouble9 | NfDouble10, C2) => z(3),
            (NfDouble11 | NfDouble12, C1) => z(3),
            (NfDouble8 | NfDouble9 | NfDouble11, B2) => z(4),
            (NfDouble10 | NfDouble12, B1) => z(4),
            (NfDouble8, A2) => z(5),
            (NfDouble9 | NfDouble10 | NfDouble11 | NfDouble12, A1) => z(5),
            _ => return None,
        };
        Some(fix)
    }

    /// Slots the caller chooses freely.
    pub fn free_slots(self) -> Vec<Slot> {
        Slot::ALL
            .iter()
            .copied()
            .filter(|&s| self.scope(s).is_some() && self.fixing(s, &[0.0; 5]).is_none())
            .collect()
    }

    /// `(differential weight, ddiff, flat output)` and whether the numbers
    /// come from prose rather than a table cell.
    pub fn profile(self) -> Result<Profile> {
        use Variant::*;
        let (dw, ddiff, output, inferred) = match self {
            Nf | NfPrime | NfDouble => return Err(Error::GenericVariant(self.tag().into())),
            Nf1 => (7, 0, (1, 2), false),
            NfPrime1 => (7, 0, (1, 3), false),
            Nf2 => (8, 1, (1, 2), false),
            NfPrime2 | NfPrime6 => (8, 1, (1, 3), false),
            Nf3 | Nf4 | Nf5 => (9, 2, (1, 2), false),
            NfPrime3 | NfPrime4 | NfPrime5 => (9, 2, (1, 3), false),
            Nf7 => (8, 1, (1, 4), true),
            NfDouble8 | NfDouble9 | NfDouble10 | NfDouble11 | NfDouble12 | Nf13 => (10, 3, (1, 2), false),
        };
        Ok(Profile {
            differential_weight: dw,
            ddiff,
            flat_output: [z(output.0), z(output.1)],
            inferred,
        })
    }

    /// Rows whose `∂/∂z_{j+1}` must not vanish at `(z0, v10)`, as row
    /// indices `j` (1-based).
    fn conditioned_rows(self) -> Vec<usize> {
        use Variant::*;
        match self {
            Nf1 | NfPrime1 | Nf5 | NfPrime5 | NfPrime6 | NfDouble12 | Nf13 => vec![],
            Nf2 | NfPrime2 | Nf7 => vec![4],
            Nf3 | NfPrime3 | Nf | NfPrime => vec![3, 4],
            Nf4 | NfPrime4 => vec![3],
            NfDouble | NfDouble8 => vec![2, 3, 4],
            NfDouble9 => vec![2, 3],
            NfDouble10 => vec![2],
            NfDouble11 => vec![3],
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
    A,
    B,
    C,
}

impl Slot {
    pub const ALL: [Slot; 9] = [
        Slot::A1,
        Slot::A2,
        Slot::B1,
        Slot::B2,
        Slot::C1,
        Slot::C2,
        Slot::A,
        Slot::B,
        Slot::C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::A1 => "a1",
            Slot::A2 => "a2",
            Slot::B1 => "b1",
            Slot::B2 => "b2",
            Slot::C1 => "c1",
            Slot::C2 => "c2",
            Slot::A => "a",
            Slot::B => "b",
            Slot::C => "c",
        }
    }

    pub fn from_name(name: &str) -> Option<Slot> {
        Slot::ALL.iter().copied().find(|s| s.name() == name)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub differential_weight: usize,
    pub ddiff: usize,
    pub flat_output: [Expr; 2],
    pub inferred: bool,
}

/// Base data: state `z0`, input `v0`, and input derivative `v̇0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasePoint {
    pub z0: [f64; 5],
    pub v0: [f64; 2],
    pub vdot0: Option<[f64; 2]>,
}

impl BasePoint {
    pub fn new(z0: [f64; 5], v0: [f64; 2]) -> Self {
        BasePoint { z0, v0, vdot0: None }
    }

    pub fn with_vdot(mut self, vdot0: [f64; 2]) -> Self {
        self.vdot0 = Some(vdot0);
        self
    }
}

/// A catalogue form with its nonlinearities and base data.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormSpec {
    variant: Variant,
    nonlinearities: BTreeMap<Slot, Expr>,
    parameters: BTreeMap<String, f64>,
    base: BasePoint,
}

const RESERVED: [&str; 8] = ["z1", "z2", "z3", "z4", "z5", "v1", "v2", "w1"];

impl NormalFormSpec {
    /// Validates a full set of nonlinearities. Free slots that are omitted
    /// default to zero; mandated fixings must be present.
    pub fn new(
        variant: Variant,
        mut nonlinearities: BTreeMap<Slot, Expr>,
        parameters: BTreeMap<String, f64>,
        base: BasePoint,
    ) -> Result<Self> {
        for p in parameters.keys() {
            if RESERVED.contains(&p.as_str()) {
                return Err(Error::InvalidSpec(format!("parameter name `{p}` is reserved")));
            }
        }
        for slot in nonlinearities.keys() {
            if variant.scope(*slot).is_none() {
                return Err(Error::InvalidSpec(format!("{variant} has no slot {slot}")));
            }
        }
        let probe = probe_points(&parameters);
        for slot in Slot::ALL {
            let Some(scope) = variant.scope(slot) else { continue };
            match (variant.fixing(slot, &base.z0), nonlinearities.get(&slot)) {
                (Some(expected), None) => {
                    return Err(Error::MissingFixing {
                        variant: variant.tag().into(),
                        slot: slot.name().into(),
                        expected: expected.to_string(),
                    })
                }
                (Some(expected), Some(given)) => {
                    if !same_function(&expected, given, &probe) {
                        return Err(Error::FixingMismatch {
                            variant: variant.tag().into(),
                            slot: slot.name().into(),
                            expected: expected.to_string(),
                        });
                    }
                }
                (None, None) => {
                    nonlinearities.insert(slot, Expr::zero());
                }
                (None, Some(_)) => {}
            }
            let e = &nonlinearities[&slot];
            for var in e.free_vars() {
                let allowed = STATE[..scope].contains(&var.as_str()) || parameters.contains_key(&var);
                if !allowed {
                    return Err(Error::Scope {
                        slot: slot.name().into(),
                        var,
                    });
                }
            }
        }
        if variant == Variant::Nf13 && base.vdot0.is_none() {
            return Err(Error::InvalidSpec("NF13 needs the input derivative vdot0".into()));
        }
        let spec = NormalFormSpec {
            variant,
            nonlinearities,
            parameters,
            base,
        };
        if variant.family() == Family::NfPrime {
            let b2 = spec.slot(Slot::B2).evaluate(&spec.z_assignment(&base.z0))?;
            if b2.abs() > 1e-10 {
                return Err(Error::InvalidSpec(format!("{variant} requires b2(z0) = 0, got {b2}")));
            }
        }
        Ok(spec)
    }

    /// Like [`NormalFormSpec::new`] but fills in the mandated fixings.
    pub fn normalized(
        variant: Variant,
        free: impl IntoIterator<Item = (Slot, Expr)>,
        parameters: BTreeMap<String, f64>,
        base: BasePoint,
    ) -> Result<Self> {
        let mut map: BTreeMap<Slot, Expr> = free.into_iter().collect();
        for slot in Slot::ALL {
            if variant.scope(slot).is_some() {
                if let Some(fix) = variant.fixing(slot, &base.z0) {
                    map.entry(slot).or_insert(fix);
                }
            }
        }
        Self::new(variant, map, parameters, base)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    pub fn base(&self) -> &BasePoint {
        &self.base
    }

    pub fn nonlinearities(&self) -> &BTreeMap<Slot, Expr> {
        &self.nonlinearities
    }

    /// The expression in a slot (zero for slots the variant lacks).
    pub fn slot(&self, slot: Slot) -> Expr {
        self.nonlinearities.get(&slot).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn z_assignment(&self, z: &[f64; 5]) -> Assignment {
        let mut a: Assignment = STATE.iter().zip(z).map(|(n, v)| (n.to_string(), *v)).collect();
        a.extend(self.parameters.iter().map(|(k, v)| (k.clone(), *v)));
        a
    }

    /// Drift and `v1`-field components.
    pub fn fields(&self) -> ([Expr; 5], [Expr; 5]) {
        use Slot::*;
        let s = |slot| self.slot(slot);
        let (o, l) = (Expr::zero(), Expr::one());
        match self.variant.family() {
            Family::Nf => (
                [o.clone(), z(3), s(B1), s(A1), o.clone()],
                [l, o.clone(), s(B2), s(A2), o],
            ),
            Family::NfPrime => (
                [z(2), o.clone(), s(B1), s(A1), o.clone()],
                [o.clone(), l, s(B2), s(A2), o],
            ),
            Family::Nf7 => (
                [z(2), z(3), o.clone(), s(A1), o.clone()],
                [o.clone(), o.clone(), l, s(A2), o],
            ),
            Family::NfDouble => (
                [o.clone(), s(C1), s(B1), s(A1), o.clone()],
                [l, s(C2), s(B2), s(A2), o],
            ),
            Family::Nf13 => (
                [o.clone(), z(3), s(A), z(5), o.clone()],
                [l, z(4), s(B) - z(5), s(C), o],
            ),
        }
    }

    /// Row `j` (1-based) of the dynamics as an expression in `z` and `v1`.
    pub fn row(&self, j: usize) -> Expr {
        let (f, g) = self.fields();
        &f[j - 1] + &g[j - 1] * Expr::var("v1")
    }
}

fn probe_points(parameters: &BTreeMap<String, f64>) -> Vec<Assignment> {
    // fixed, irregular points; enough to tell polynomials of low degree apart
    const P: [[f64; 5]; 4] = [
        [0.31, -0.72, 0.45, 1.13, -0.27],
        [-1.07, 0.52, -0.38, 0.24, 0.91],
        [0.66, 0.17, 1.29, -0.83, 0.08],
        [-0.21, -1.34, 0.03, 0.57, -0.64],
    ];
    P.iter()
        .map(|p| {
            let mut a: Assignment = STATE.iter().zip(p).map(|(n, v)| (n.to_string(), *v)).collect();
            a.extend(parameters.iter().map(|(k, v)| (k.clone(), *v)));
            a
        })
        .collect()
}

fn same_function(a: &Expr, b: &Expr, probe: &[Assignment]) -> bool {
    if a == b {
        return true;
    }
    probe.iter().all(|p| match (a.evaluate(p), b.evaluate(p)) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
        _ => false,
    })
}

/// The control-affine system of the form, `g2 = ∂/∂z5`.
pub fn build_normal_form(spec: &NormalFormSpec) -> ControlAffineSystem {
    let st = state_names();
    let (f, g) = spec.fields();
    let drift = VectorField::new(st.clone(), f.to_vec()).expect("five components");
    let g1 = VectorField::new(st.clone(), g.to_vec()).expect("five components");
    let g2 = VectorField::basis(&st, 4);
    ControlAffineSystem::new(drift, g1, g2, spec.parameters.clone(), spec.base.z0.to_vec())
        .expect("spec validated its variables")
        .with_inputs(Some(spec.base.v0), spec.base.vdot0)
}

/// Distance of the base data from the input-regularity singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputMargin {
    /// The variant imposes no input condition.
    NoCondition,
    Value(f64),
}

impl InputMargin {
    pub fn value(self) -> Option<f64> {
        match self {
            InputMargin::NoCondition => None,
            InputMargin::Value(v) => Some(v),
        }
    }

    /// True when the spec is away from the singular set.
    pub fn is_regular(self, threshold: f64) -> bool {
        match self {
            InputMargin::NoCondition => true,
            InputMargin::Value(v) => v > threshold,
        }
    }
}

/// `|∂(row_j)/∂z_{j+1}|` at a point, for each conditioned row.
pub(crate) fn row_partials(spec: &NormalFormSpec, rows: &[usize], z: &[f64; 5], v1: f64) -> Result<Vec<f64>> {
    let mut at = spec.z_assignment(z);
    at.set("v1", v1);
    rows.iter()
        .map(|&j| Ok(spec.row(j).differentiate(STATE[j]).evaluate(&at)?.abs()))
        .collect()
}

/// Smallest absolute value among the variant's required nonvanishing
/// quantities, evaluated at `(z0, v10[, v̇10])`.
pub fn input_regularity_margin(spec: &NormalFormSpec) -> Result<InputMargin> {
    let b = &spec.base;
    if spec.variant == Variant::Nf13 {
        let vdot = b.vdot0.expect("validated")[0];
        return Ok(InputMargin::Value(nf13_jacobian_determinant(spec, &b.z0, b.v0[0], vdot)?.abs()));
    }
    let rows = spec.variant.conditioned_rows();
    if rows.is_empty() {
        return Ok(InputMargin::NoCondition);
    }
    let vals = row_partials(spec, &rows, &b.z0, b.v0[0])?;
    Ok(InputMargin::Value(vals.into_iter().fold(f64::INFINITY, f64::min)))
}

/// `∂a/∂z4 − (∂a/∂z3 − ∂b/∂z4) v1 − (∂b/∂z3 − ∂c/∂z4) v1² − ∂c/∂z3 v1³ + v̇1`.
pub fn nf13_jacobian_determinant(spec: &NormalFormSpec, z: &[f64; 5], v1: f64, vdot1: f64) -> Result<f64> {
    if spec.variant != Variant::Nf13 {
        return Err(Error::InvalidSpec(format!("{} is not NF13", spec.variant)));
    }
    let at = spec.z_assignment(z);
    let d = |slot: Slot, var: &str| spec.slot(slot).differentiate(var).evaluate(&at);
    let (a3, a4) = (d(Slot::A, "z3")?, d(Slot::A, "z4")?);
    let (b3, b4) = (d(Slot::B, "z3")?, d(Slot::B, "z4")?);
    let (c3, c4) = (d(Slot::C, "z3")?, d(Slot::C, "z4")?);
    Ok(a4 - (a3 - b4) * v1 - (b3 - c4) * v1 * v1 - c3 * v1.powi(3) + vdot1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralCheck {
    pub tag: String,
    pub satisfied: bool,
    pub evidence: String,
    /// Decided by a prolongation test rather than a closed-form condition.
    pub operational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub input_margin: InputMargin,
    pub structural: Vec<StructuralCheck>,
}

impl RegularityReport {
    pub fn all_satisfied(&self) -> bool {
        self.structural.iter().all(|c| c.satisfied)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Structural {
    /// Not linearizable after any `k ≤ p`-fold prolongation of `v1`.
    NotLinearizable(usize),
    /// `∂slot/∂var (z0) = 0`.
    Pin(Slot, &'static str),
}

fn structural_conditions(variant: Variant) -> Vec<Structural> {
    use Structural::*;
    use Variant::*;
    match variant {
        NfPrime6 => vec![NotLinearizable(0)],
        Nf5 | NfPrime5 => vec![NotLinearizable(1), Pin(Slot::B2, "z4")],
        NfDouble | NfDouble9 => vec![NotLinearizable(2)],
        NfDouble10 => vec![NotLinearizable(2), Pin(Slot::B2, "z4")],
        NfDouble11 => vec![NotLinearizable(2), Pin(Slot::C2, "z3")],
        NfDouble12 => vec![NotLinearizable(2), Pin(Slot::C2, "z3"), Pin(Slot::B2, "z4")],
        _ => vec![],
    }
}

fn summarize(rep: &LinearizabilityReport) -> String {
    format!(
        "ranks {:?}, first noninvolutive {:?}, flagged {:?}",
        rep.ranks, rep.first_noninvolutive, rep.flagged_steps
    )
}

/// Evaluates the variant's structural conditions: (C1)/(C2)/(C3) as
/// failure of every prolongation of `v1` up to order 0/1/2, and
/// derivative pins exactly at `z0`.
pub fn structural_regularity_report(spec: &NormalFormSpec, plan: &SamplePlan) -> Result<RegularityReport> {
    let sys = build_normal_form(spec);
    let mut structural = Vec::new();
    for cond in structural_conditions(spec.variant) {
        let check = match cond {
            Structural::NotLinearizable(p) => {
                let mut evidence = Vec::new();
                let mut satisfied = true;
                for k in 0..=p {
                    let prolonged = prolong_first_control(&sys, k);
                    let rep = static_feedback_linearizable(&prolonged.augmented, plan)?;
                    satisfied &= !rep.linearizable;
                    evidence.push(format!("{k}-fold prolongation of v1: {}", summarize(&rep)));
                }
                StructuralCheck {
                    tag: format!("C{}", p + 1),
                    satisfied,
                    evidence: evidence.join("; "),
                    operational: true,
                }
            }
            Structural::Pin(slot, var) => {
                let value = spec.slot(slot).differentiate(var).evaluate(&spec.z_assignment(&spec.base.z0))?;
                StructuralCheck {
                    tag: format!("d{}/d{}(z0) = 0", slot, var),
                    satisfied: value.abs() <= 1e-10,
                    evidence: format!("value {value:e}"),
                    operational: false,
                }
            }
        };
        structural.push(check);
    }
    Ok(RegularityReport {
        input_margin: input_regularity_margin(spec)?,
        structural,
    })
}

/// Table values and flat output of a specialized variant.
pub fn expected_profile(spec: &NormalFormSpec) -> Result<Profile> {
    spec.variant.profile()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn e(src: &str) -> Expr {
        parse_expr(src, &STATE).unwrap()
    }

    fn origin() -> BasePoint {
        BasePoint::new([0.0; 5], [1.0, 0.0])
    }

    #[test]
    fn nf13_zero_nonlinearities() {
        let spec = NormalFormSpec::normalized(Variant::Nf13, [], BTreeMap::new(), origin().with_vdot([0.0, 0.0]))
            .unwrap();
        let sys = build_normal_form(&spec);
        let at = sys.assignment(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(sys.drift.evaluate(&at).unwrap(), vec![0.0, 0.3, 0.0, 0.5, 0.0]);
        assert_eq!(sys.g1.evaluate(&at).unwrap(), vec![1.0, 0.4, -0.5, 0.0, 0.0]);
        assert_eq!(sys.g2.evaluate(&at).unwrap(), vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(input_regularity_margin(&spec).unwrap(), InputMargin::Value(0.0));
    }

    #[test]
    fn missing_fixing_is_an_error() {
        let mut map = BTreeMap::new();
        map.insert(Slot::A2, e("z5"));
        let err = NormalFormSpec::new(Variant::Nf3, map, BTreeMap::new(), origin()).unwrap_err();
        assert!(matches!(err, Error::MissingFixing { ref slot, .. } if slot == "b2"));
    }

    #[test]
    fn wrong_fixing_is_an_error() {
        let mut map = BTreeMap::new();
        map.insert(Slot::A2, e("z5"));
        map.insert(Slot::B2, e("z3"));
        let err = NormalFormSpec::new(Variant::Nf3, map, BTreeMap::new(), origin()).unwrap_err();
        assert!(matches!(err, Error::FixingMismatch { .. }));
    }

    #[test]
    fn scope_violation() {
        let err = NormalFormSpec::normalized(Variant::Nf3, [(Slot::B1, e("z5"))], BTreeMap::new(), origin())
            .unwrap_err();
        assert_eq!(
            err,
            Error::Scope {
                slot: "b1".into(),
                var: "z5".into()
            }
        );
    }

    #[test]
    fn nf_prime_pins_b2_at_base() {
        let base = BasePoint::new([0.0, 0.0, 0.0, 0.5, 0.0], [1.0, 0.0]);
        let spec = NormalFormSpec::normalized(Variant::NfPrime3, [], BTreeMap::new(), base).unwrap();
        assert_eq!(spec.slot(Slot::B2).evaluate(&spec.z_assignment(&base.z0)).unwrap(), 0.0);
        let err = NormalFormSpec::normalized(Variant::NfPrime5, [(Slot::B2, e("1 + z4^2"))], BTreeMap::new(), origin());
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn nf7_margin() {
        let spec = NormalFormSpec::normalized(Variant::Nf7, [(Slot::A1, e("z4*z5"))], BTreeMap::new(), origin())
            .unwrap();
        assert_eq!(input_regularity_margin(&spec).unwrap(), InputMargin::Value(1.0));
    }

    #[test]
    fn brunovsky_has_no_input_condition() {
        let spec = NormalFormSpec::normalized(Variant::Nf1, [], BTreeMap::new(), origin()).unwrap();
        assert_eq!(input_regularity_margin(&spec).unwrap(), InputMargin::NoCondition);
    }

    #[test]
    fn nf3_margin_matches_table_formula() {
        // ∂b1/∂z4 + v10 and ∂a1/∂z5 + v10
        let base = BasePoint::new([0.1, 0.2, 0.3, 0.4, 0.5], [0.7, 0.0]);
        let spec = NormalFormSpec::normalized(
            Variant::Nf3,
            [(Slot::B1, e("z4^2")), (Slot::A1, e("-3*z5"))],
            BTreeMap::new(),
            base,
        )
        .unwrap();
        let expected = f64::min((0.8f64 + 0.7).abs(), (-3.0f64 + 0.7).abs());
        let got = input_regularity_margin(&spec).unwrap().value().unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn determinant_special_cases() {
        let spec = NormalFormSpec::normalized(Variant::Nf13, [], BTreeMap::new(), origin().with_vdot([0.7, 0.0]))
            .unwrap();
        assert_eq!(nf13_jacobian_determinant(&spec, &[0.0; 5], 2.0, 0.7).unwrap(), 0.7);
        let spec = NormalFormSpec::normalized(
            Variant::Nf13,
            [(Slot::A, e("z3*z4"))],
            BTreeMap::new(),
            origin().with_vdot([0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(nf13_jacobian_determinant(&spec, &[0.0; 5], 2.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn profiles() {
        let p = Variant::NfPrime6.profile().unwrap();
        assert_eq!((p.differential_weight, p.ddiff), (8, 1));
        assert_eq!(p.flat_output, [e("z1"), e("z3")]);
        let p = Variant::NfDouble12.profile().unwrap();
        assert_eq!((p.differential_weight, p.ddiff), (10, 3));
        let p = Variant::Nf7.profile().unwrap();
        assert_eq!(p.flat_output[1], e("z4"));
        assert!(p.inferred);
        assert!(matches!(Variant::NfDouble.profile(), Err(Error::GenericVariant(_))));
    }

    #[test]
    fn tags_round_trip() {
        for v in Variant::SPECIALIZED.iter().chain(Variant::GENERIC.iter()) {
            assert_eq!(Variant::from_tag(v.tag()), Some(*v));
            let json = serde_json::to_string(v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.tag()));
        }
    }

    #[test]
    fn motor_reduced_form_builds() {
        let params: BTreeMap<String, f64> = [("J", 1.0), ("n_p", 2.0), ("tau_L", 0.5)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let a2 = crate::expr::parse_expr_with("J*(z4 - n_p*z1)/(J*z2 + tau_L)", &|n: &str| {
            STATE.contains(&n) || params.contains_key(n)
        })
        .unwrap();
        let spec = NormalFormSpec::normalized(Variant::NfPrime6, [(Slot::A2, a2.clone())], params, origin()).unwrap();
        let sys = build_normal_form(&spec);
        assert_eq!(sys.g1.components()[3], a2);
        assert_eq!(sys.drift.components()[3], e("z5"));
    }
}
