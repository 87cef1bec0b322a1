//! Seeded random members of each catalogue row: low-degree polynomial
//! nonlinearities around a random base point, respecting the fixings,
//! variable scopes and derivative pins of the row.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::series::Series;
use crate::expr::{Expr, Number};
use crate::flat::{parametrize_trajectory, FlatOutputCurve, TimeGrid};
use crate::normal_forms::{build_normal_form, BasePoint, Family, NormalFormSpec, Slot, Variant, STATE};

/// How a slot's polynomial is drawn.
#[derive(Debug, Clone, Copy)]
struct Draw {
    /// Coordinates `z1..z_scope` the polynomial may use.
    scope: usize,
    constant: bool,
    /// Variable whose linear coefficient is zero; it enters quadratically.
    pinned: Option<usize>,
    /// Extra linear coefficient forced onto a variable.
    forced: Option<(usize, f64)>,
    scale: f64,
}

impl Draw {
    fn new(scope: usize) -> Self {
        Draw {
            scope,
            constant: true,
            pinned: None,
            forced: None,
            scale: 0.3,
        }
    }

    fn no_constant(mut self) -> Self {
        self.constant = false;
        self
    }

    fn pin(mut self, var: usize) -> Self {
        self.pinned = Some(var);
        self
    }

    fn force(mut self, var: usize, coeff: f64) -> Self {
        self.forced = Some((var, coeff));
        self
    }

    fn scale(mut self, s: f64) -> Self {
        self.scale = s;
        self
    }
}

fn polynomial(rng: &mut ChaCha8Rng, z0: &[f64; 5], d: Draw) -> Expr {
    let delta = |i: usize| Expr::var(STATE[i - 1]) - z0[i - 1];
    let c = |rng: &mut ChaCha8Rng| rng.gen_range(-d.scale..d.scale);
    let mut terms = Vec::new();
    if d.constant {
        terms.push(Expr::constant(c(rng)));
    }
    for i in 1..=d.scope {
        let mut k = c(rng);
        if d.pinned == Some(i) {
            k = 0.0;
        }
        if let Some((v, f)) = d.forced {
            if v == i {
                k = f + 0.2 * k;
            }
        }
        terms.push(delta(i) * k);
    }
    // two quadratic monomials keep the fields nonlinear without bloating them
    for _ in 0..2 {
        let i = rng.gen_range(1..=d.scope);
        let j = rng.gen_range(1..=d.scope);
        terms.push(delta(i) * delta(j) * c(rng));
    }
    if let Some(i) = d.pinned {
        let q = rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        terms.push(delta(i).powi(2) * q);
    }
    Expr::sum(terms)
}

/// A random admissible spec for a catalogue row. The same seed always
/// gives the same spec.
pub fn random_spec(variant: Variant, seed: u64) -> Result<NormalFormSpec> {
    use Slot::*;
    use Variant::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (variant as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut z0 = [0.0; 5];
    for z in z0.iter_mut() {
        *z = rng.gen_range(-0.5..0.5);
    }
    let v0 = [1.0, rng.gen_range(-0.5..0.5)];
    let mut base = BasePoint::new(z0, v0);
    if variant == Nf13 {
        base = base.with_vdot([1.0, 0.0]);
    }
    let draws: Vec<(Slot, Draw)> = match variant {
        Nf1 | NfPrime1 => vec![],
        Nf2 | NfPrime2 => vec![(A1, Draw::new(5))],
        Nf3 | NfPrime3 => vec![(B1, Draw::new(4)), (A1, Draw::new(5))],
        Nf4 | NfPrime4 => vec![(B1, Draw::new(4)), (A2, Draw::new(4))],
        Nf5 => vec![(B2, Draw::new(4).pin(4).force(3, 1.0)), (A2, Draw::new(4))],
        NfPrime5 => vec![(B2, Draw::new(4).no_constant().pin(4).force(3, 1.0)), (A2, Draw::new(4))],
        NfPrime6 => vec![(A2, Draw::new(4).force(4, 0.5))],
        Nf7 => vec![(A1, Draw::new(5))],
        NfDouble8 => vec![(C1, Draw::new(3)), (B1, Draw::new(4)), (A1, Draw::new(5))],
        NfDouble9 => vec![(C1, Draw::new(3)), (B1, Draw::new(4)), (A2, Draw::new(4))],
        NfDouble10 => vec![
            (C1, Draw::new(3)),
            (B2, Draw::new(4).pin(4).force(3, 1.0)),
            (A2, Draw::new(4)),
        ],
        NfDouble11 => vec![
            (C2, Draw::new(3).pin(3).force(2, 1.0)),
            (B1, Draw::new(4)),
            (A2, Draw::new(4)),
        ],
        NfDouble12 => vec![
            (C2, Draw::new(3).pin(3).force(2, 1.0)),
            (B2, Draw::new(4).pin(4).force(3, 1.0)),
            (A2, Draw::new(4)),
        ],
        Nf13 => vec![
            (A, Draw::new(4).scale(0.05)),
            (B, Draw::new(4).scale(0.05)),
            (C, Draw::new(4).scale(0.05)),
        ],
        Nf | NfPrime | NfDouble => {
            let family = variant.family();
            let (c, b) = (Draw::new(3), Draw::new(4));
            let mut v = vec![(B1, b), (A1, Draw::new(5)), (A2, Draw::new(5))];
            if family == Family::NfPrime {
                v.push((B2, b.no_constant()));
            } else {
                v.push((B2, b));
            }
            if family == Family::NfDouble {
                v.push((C1, c));
                v.push((C2, c));
            }
            v
        }
    };
    let free: Vec<(Slot, Expr)> = draws
        .into_iter()
        .map(|(slot, d)| (slot, polynomial(&mut rng, &z0, d)))
        .collect();
    NormalFormSpec::normalized(variant, free, BTreeMap::new(), base)
}

/// A degree-6 flat-output curve: the Taylor polynomial at `t = 0` of the
/// flat output along the form's solution from `z0` under smooth random
/// inputs starting at `v0` (and `v̇0` when given).
pub fn random_curve(spec: &NormalFormSpec, seed: u64) -> Result<FlatOutputCurve> {
    const LEN: usize = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ 0x5eed);
    let base = spec.base();
    let vdot = base.vdot0.unwrap_or([rng.gen_range(-0.2..0.2), rng.gen_range(-0.5..0.5)]);
    let inputs = [0, 1].map(|i| {
        let mut c = vec![0.0; LEN];
        c[0] = base.v0[i];
        c[1] = vdot[i];
        c[2] = rng.gen_range(-0.2..0.2);
        c[3] = rng.gen_range(-0.05..0.05);
        Series::new(c)
    });
    let sys = build_normal_form(spec);
    let tape = sys.compile()?;
    let mut z: Vec<Series> = base.z0.iter().map(|c| Series::constant(*c, LEN)).collect();
    let params: Vec<Series> = sys.parameters.values().map(|p| Series::constant(*p, LEN)).collect();
    // Picard iteration: each pass fixes one more coefficient
    for _ in 1..LEN {
        let mut args = z.clone();
        args.extend(params.iter().cloned());
        let out = tape.eval_generic(&args, &args[0])?;
        for i in 0..5 {
            let rate = out[i]
                .add(&out[5 + i].mul(&inputs[0]))
                .add(&out[10 + i].mul(&inputs[1]));
            let c = z[i].coeffs_mut();
            for k in 1..LEN {
                c[k] = rate.coeffs()[k - 1] / k as f64;
            }
        }
    }
    let output = spec.variant().profile()?.flat_output;
    let index = |e: &Expr| STATE.iter().position(|s| Expr::var(*s) == *e).expect("flat output is a coordinate");
    FlatOutputCurve::new(
        z[index(&output[0])].coeffs().to_vec(),
        z[index(&output[1])].coeffs().to_vec(),
    )
}

/// First curve from [`random_curve`]'s stream whose recovery on `grid`
/// keeps every node margin above `min_margin`.
pub fn admissible_curve(spec: &NormalFormSpec, seed: u64, grid: &TimeGrid, min_margin: f64) -> Result<FlatOutputCurve> {
    for attempt in 0..50 {
        let curve = random_curve(spec, seed.wrapping_mul(1000).wrapping_add(attempt))?;
        if let Ok(traj) = parametrize_trajectory(spec, &curve, grid) {
            if traj.min_margin() > min_margin {
                return Ok(curve);
            }
        }
    }
    Err(Error::DegenerateCurve(format!(
        "no curve with margins above {min_margin} for {} (seed {seed})",
        spec.variant()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        for v in Variant::SPECIALIZED {
            let a = random_spec(v, 7).unwrap();
            let b = random_spec(v, 7).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, random_spec(v, 8).unwrap());
        }
    }

    #[test]
    fn pins_hold() {
        let spec = random_spec(Variant::NfDouble12, 3).unwrap();
        let at = spec.z_assignment(&spec.base().z0);
        let d = spec.slot(Slot::C2).differentiate("z3").evaluate(&at).unwrap();
        assert!(d.abs() < 1e-14);
        let d = spec.slot(Slot::B2).differentiate("z4").evaluate(&at).unwrap();
        assert!(d.abs() < 1e-14);
    }
}
