//! Distributions spanned by vector fields, the filtration
//! `D^{j+1} = D^j + [f, D^j]`, and sampled rank/involutivity tests.
//!
//! Ranks are decided numerically at points drawn uniformly from a box
//! around a base point. A distribution's generator list is never rescaled,
//! and involutivity is judged from the brackets of generator pairs.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Assignment, Expr, Tape};
use crate::field::{lie_bracket, ControlAffineSystem, VectorField};

/// How sample points are drawn around a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            radius: 0.1,
            count: 25,
            seed: 42,
            tol: 1e-8,
        }
    }
}

impl SamplePlan {
    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || self.count == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidSpec(format!("bad sample plan {self:?}")));
        }
        Ok(())
    }
}

/// Sample points in tape variable order (state, then fixed extras).
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub vars: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

impl SampleSet {
    /// Draws `plan.count` points; the first is the base point itself.
    /// Points where `accept` fails are redrawn, up to ten times the
    /// requested count.
    pub fn draw<F>(state: &[String], base: &Assignment, plan: &SamplePlan, accept: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool,
    {
        plan.validate()?;
        let mut vars = state.to_vec();
        let mut center = base.values_for(state)?;
        for (k, v) in base.iter() {
            if !state.contains(k) {
                vars.push(k.clone());
                center.push(*v);
            }
        }
        let n = state.len();
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mut points = Vec::with_capacity(plan.count);
        let mut attempts = 0;
        while points.len() < plan.count && attempts < 10 * plan.count {
            let mut p = center.clone();
            if attempts > 0 {
                for x in p.iter_mut().take(n) {
                    *x += rng.gen_range(-plan.radius..=plan.radius);
                }
            }
            attempts += 1;
            if accept(&p) {
                points.push(p);
            }
        }
        if points.len() < plan.count {
            return Err(Error::Sampling {
                got: points.len(),
                wanted: plan.count,
            });
        }
        Ok(SampleSet { vars, points })
    }

    pub fn assignment(&self, i: usize) -> Assignment {
        self.vars
            .iter()
            .cloned()
            .zip(self.points[i].iter().copied())
            .collect()
    }
}

/// Numerical rank: singular values above `tol` times the largest one.
pub fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    generators: Vec<VectorField>,
}

impl Distribution {
    pub fn new(generators: Vec<VectorField>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Dimension("distribution needs a generator".into()));
        };
        if generators.iter().any(|g| g.state() != first.state()) {
            return Err(Error::Dimension("generators live on different states".into()));
        }
        Ok(Distribution { generators })
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn state(&self) -> &[String] {
        self.generators[0].state()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }
}

/// Per-generator compiled values and (lazily) Jacobians.
struct GeneratorEval {
    values: Tape,
    jacobian: Option<Tape>,
}

impl GeneratorEval {
    fn new(g: &VectorField, vars: &[String]) -> Result<Self> {
        Ok(GeneratorEval {
            values: Tape::compile(g.components(), vars)?,
            jacobian: None,
        })
    }

    fn ensure_jacobian(&mut self, g: &VectorField, vars: &[String]) -> Result<()> {
        if self.jacobian.is_none() {
            let flat: Vec<Expr> = g.jacobian().into_iter().flatten().collect();
            self.jacobian = Some(Tape::compile(&flat, vars)?);
        }
        Ok(())
    }
}

fn column_matrix(n: usize, columns: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

/// Rank and involutivity defect of generators at one point.
fn rank_and_defect(
    n: usize,
    values: &[Vec<f64>],
    jacobians: Option<&[Vec<f64>]>,
    tol: f64,
) -> (usize, usize) {
    let m = column_matrix(n, values);
    let r = matrix_rank(&m, tol);
    if r == n {
        return (r, 0);
    }
    let Some(jac) = jacobians else {
        return (r, 0);
    };
    let mut cols = values.to_vec();
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            // [X_a, X_b] = J_b X_a − J_a X_b
            let col = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|k| jac[b][i * n + k] * values[a][k] - jac[a][i * n + k] * values[b][k])
                        .sum()
                })
                .collect();
            cols.push(col);
        }
    }
    let r2 = matrix_rank(&column_matrix(n, &cols), tol);
    (r, r2.saturating_sub(r))
}

fn tape_vars(state: &[String], at: &Assignment) -> (Vec<String>, Vec<f64>) {
    let mut vars = state.to_vec();
    let mut vals = Vec::new();
    for (k, _) in at.iter() {
        if !state.contains(k) {
            vars.push(k.clone());
        }
    }
    for v in &vars {
        vals.push(at.get(v).unwrap_or(f64::NAN));
    }
    (vars, vals)
}

fn eval_at(d: &Distribution, at: &Assignment, with_jacobians: bool) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (vars, vals) = tape_vars(d.state(), at);
    let mut values = Vec::new();
    let mut jacs = Vec::new();
    for g in d.generators() {
        let mut ev = GeneratorEval::new(g, &vars)?;
        values.push(ev.values.eval(&vals)?);
        if with_jacobians {
            ev.ensure_jacobian(g, &vars)?;
            jacs.push(ev.jacobian.as_ref().unwrap().eval(&vals)?);
        }
    }
    Ok((values, jacs))
}

/// Rank of the generator matrix at a point.
pub fn numeric_rank(d: &Distribution, at: &Assignment, tol: f64) -> Result<usize> {
    let (values, _) = eval_at(d, at, false)?;
    Ok(rank_and_defect(d.dim(), &values, None, tol).0)
}

/// `rank(generators ∪ pairwise brackets) − rank(generators)` at a point.
pub fn involutivity_defect(d: &Distribution, at: &Assignment, tol: f64) -> Result<usize> {
    let (values, jacs) = eval_at(d, at, true)?;
    Ok(rank_and_defect(d.dim(), &values, Some(&jacs), tol).1)
}

/// Plurality value of a list of ranks; ties go to the smaller rank.
fn plurality(ranks: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in ranks {
        *counts.entry(r).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map(|(r, _)| r)
        .unwrap_or(0)
}

/// Sampled rank of a distribution around `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankProfile {
    pub rank: usize,
    pub constant: bool,
    pub sample_ranks: Vec<usize>,
}

pub fn constant_rank_profile(d: &Distribution, base: &Assignment, plan: &SamplePlan) -> Result<RankProfile> {
    let probe_vars = tape_vars(d.state(), base).0;
    let evals = d
        .generators()
        .iter()
        .map(|g| GeneratorEval::new(g, &probe_vars))
        .collect::<Result<Vec<_>>>()?;
    let samples = SampleSet::draw(d.state(), base, plan, |p| {
        evals.iter().all(|e| e.values.eval(p).is_ok())
    })?;
    let sample_ranks = samples
        .points
        .par_iter()
        .map(|p| {
            let values: Vec<Vec<f64>> = evals.iter().map(|e| e.values.eval(p)).collect::<Result<_>>()?;
            Ok(rank_and_defect(d.dim(), &values, None, plan.tol).0)
        })
        .collect::<Result<Vec<_>>>()?;
    let rank = plurality(&sample_ranks);
    let constant = sample_ranks.iter().all(|&r| r == rank);
    Ok(RankProfile {
        rank,
        constant,
        sample_ranks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationStep {
    pub distribution: Distribution,
    /// Plurality rank over the samples.
    pub rank: usize,
    pub sample_ranks: Vec<usize>,
    pub constant_rank: bool,
    /// Largest involutivity defect seen at any sample.
    pub max_defect: usize,
    pub involutive: bool,
}

/// `D^0 ⊂ D^1 ⊂ ...` with per-step diagnostics. Generators are ordered
/// `g1, g2, ad_f g1, ad_f g2, ad_f^2 g1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub dim: usize,
    pub steps: Vec<FiltrationStep>,
}

impl Filtration {
    pub fn ranks(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.rank).collect()
    }

    pub fn final_rank(&self) -> usize {
        self.steps.last().map(|s| s.rank).unwrap_or(0)
    }
}

/// Builds the filtration of `sys` around its base point. Stops when the
/// rank reaches the state dimension, stops growing, or at `D^{n-1}`.
pub fn build_filtration(sys: &ControlAffineSystem, plan: &SamplePlan) -> Result<Filtration> {
    let n = sys.dim();
    let vars = sys.tape_vars();
    let system_tape = sys.compile()?;
    let samples = SampleSet::draw(sys.state(), &sys.base_assignment(), plan, |p| {
        system_tape.eval(p).is_ok()
    })?;
    debug_assert_eq!(samples.vars, vars);

    let mut fields: Vec<VectorField> = vec![sys.g1.clone(), sys.g2.clone()];
    let mut evals: Vec<GeneratorEval> = fields
        .iter()
        .map(|g| GeneratorEval::new(g, &vars))
        .collect::<Result<_>>()?;
    // values[point][generator]
    let mut values: Vec<Vec<Vec<f64>>> = vec![Vec::new(); samples.points.len()];
    let mut jacobians: Vec<Vec<Vec<f64>>> = vec![Vec::new(); samples.points.len()];
    let mut newest = 0..fields.len();
    let mut steps: Vec<FiltrationStep> = Vec::new();

    for j in 0..n {
        if j > 0 {
            let start = fields.len();
            for k in newest.clone() {
                let b = lie_bracket(&sys.drift, &fields[k]);
                evals.push(GeneratorEval::new(&b, &vars)?);
                fields.push(b);
            }
            newest = start..fields.len();
        }
        let evals_ref = &evals;
        let fresh = newest.clone();
        let new_values: Vec<Vec<Vec<f64>>> = samples
            .points
            .par_iter()
            .map(|p| fresh.clone().map(|k| evals_ref[k].values.eval(p)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        for (dst, src) in values.iter_mut().zip(new_values) {
            dst.extend(src);
        }

        let ranks: Vec<usize> = values
            .par_iter()
            .map(|v| rank_and_defect(n, v, None, plan.tol).0)
            .collect();
        let needs_brackets = ranks.iter().any(|&r| r < n);
        let defects: Vec<usize> = if needs_brackets {
            for (k, g) in fields.iter().enumerate() {
                evals[k].ensure_jacobian(g, &vars)?;
            }
            let evals_ref = &evals;
            let have = jacobians[0].len();
            let new_jacs: Vec<Vec<Vec<f64>>> = samples
                .points
                .par_iter()
                .map(|p| {
                    (have..fields.len())
                        .map(|k| evals_ref[k].jacobian.as_ref().unwrap().eval(p))
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            for (dst, src) in jacobians.iter_mut().zip(new_jacs) {
                dst.extend(src);
            }
            values
                .par_iter()
                .zip(jacobians.par_iter())
                .map(|(v, jac)| rank_and_defect(n, v, Some(jac), plan.tol).1)
                .collect()
        } else {
            vec![0; ranks.len()]
        };

        let rank = plurality(&ranks);
        let max_defect = defects.iter().copied().max().unwrap_or(0);
        steps.push(FiltrationStep {
            distribution: Distribution::new(fields.clone())?,
            rank,
            constant_rank: ranks.iter().all(|&r| r == rank),
            sample_ranks: ranks,
            max_defect,
            involutive: max_defect == 0,
        });
        let stalled = j > 0 && steps[j - 1].rank == rank;
        if rank == n || stalled {
            break;
        }
    }
    Ok(Filtration { dim: n, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn state(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("z{i}")).collect()
    }

    fn field(st: &[String], comps: &[&str]) -> VectorField {
        VectorField::new(
            st.to_vec(),
            comps.iter().map(|c| parse_expr(c, st).unwrap()).collect(),
        )
        .unwrap()
    }

    fn origin(st: &[String]) -> Assignment {
        st.iter().map(|s| (s.clone(), 0.0)).collect()
    }

    #[test]
    fn identity_frame_has_full_rank() {
        let st = state(5);
        let d = Distribution::new((0..5).map(|i| VectorField::basis(&st, i)).collect()).unwrap();
        let at: Assignment = st.iter().map(|s| (s.clone(), 0.3)).collect();
        assert_eq!(numeric_rank(&d, &at, 1e-8).unwrap(), 5);
        assert_eq!(involutivity_defect(&d, &at, 1e-8).unwrap(), 0);
    }

    #[test]
    fn proportional_generators() {
        let st = state(3);
        let x = field(&st, &["z2", "1", "z1*z3"]);
        let d = Distribution::new(vec![x.clone(), x.scale(&Expr::constant(2.0))]).unwrap();
        let at: Assignment = st.iter().map(|s| (s.clone(), 0.7)).collect();
        assert_eq!(numeric_rank(&d, &at, 1e-8).unwrap(), 1);
    }

    #[test]
    fn nf2_control_distribution_is_not_involutive() {
        // g1 = ∂z1 + z5 ∂z4, g2 = ∂z5: rank 2, [g1, g2] = −∂z4
        let st = state(5);
        let g1 = field(&st, &["1", "0", "0", "z5", "0"]);
        let g2 = VectorField::basis(&st, 4);
        let d = Distribution::new(vec![g1, g2]).unwrap();
        assert_eq!(numeric_rank(&d, &origin(&st), 1e-8).unwrap(), 2);
        assert_eq!(involutivity_defect(&d, &origin(&st), 1e-8).unwrap(), 1);
    }

    #[test]
    fn rank_drop_on_a_hyperplane_is_flagged() {
        let st = state(2);
        let d = Distribution::new(vec![VectorField::basis(&st, 0), field(&st, &["0", "z1"])]).unwrap();
        let base = origin(&st);
        let prof = constant_rank_profile(&d, &base, &SamplePlan::default()).unwrap();
        // the base point itself has z1 = 0
        assert!(!prof.constant);
        assert_eq!(prof.sample_ranks[0], 1);
        assert_eq!(prof.rank, 2);
    }

    #[test]
    fn single_nonvanishing_field() {
        let st = state(3);
        let d = Distribution::new(vec![field(&st, &["1", "z1", "z2^2"])]).unwrap();
        let prof = constant_rank_profile(&d, &origin(&st), &SamplePlan::default()).unwrap();
        assert_eq!((prof.rank, prof.constant), (1, true));
    }

    #[test]
    fn brunovsky_one_four_filtration() {
        let st = state(5);
        let f = field(&st, &["0", "z3", "z4", "z5", "0"]);
        let sys = ControlAffineSystem::new(
            f,
            VectorField::basis(&st, 0),
            VectorField::basis(&st, 4),
            BTreeMap::new(),
            vec![0.0; 5],
        )
        .unwrap();
        let filt = build_filtration(&sys, &SamplePlan::default()).unwrap();
        assert_eq!(filt.ranks(), vec![2, 3, 4, 5]);
        assert!(filt.steps.iter().all(|s| s.involutive && s.constant_rank));
    }

    #[test]
    fn brunovsky_two_three_filtration() {
        let st = state(5);
        let f = field(&st, &["z2", "0", "z4", "z5", "0"]);
        let sys = ControlAffineSystem::new(
            f,
            VectorField::basis(&st, 1),
            VectorField::basis(&st, 4),
            BTreeMap::new(),
            vec![0.0; 5],
        )
        .unwrap();
        assert_eq!(build_filtration(&sys, &SamplePlan::default()).unwrap().ranks(), vec![2, 4, 5]);
    }

    #[test]
    fn sampling_skips_poles() {
        let st = state(1);
        let d = Distribution::new(vec![field(&st, &["1/z1"])]).unwrap();
        let base: Assignment = [("z1".to_string(), 0.0)].into_iter().collect();
        // base point is a pole, random draws are not
        let prof = constant_rank_profile(&d, &base, &SamplePlan::default()).unwrap();
        assert_eq!(prof.sample_ranks.len(), 25);
    }
}
