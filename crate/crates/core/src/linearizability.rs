//! Static feedback linearizability: every `D^j` of constant rank and
//! involutive, with `D^{n-1}` the whole tangent space.

use crate::distributions::{build_filtration, Filtration, SamplePlan};
use crate::error::{Error, Result};
use crate::field::ControlAffineSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizabilityReport {
    pub linearizable: bool,
    pub ranks: Vec<usize>,
    pub involutive: Vec<bool>,
    /// Smallest `j` with a nonzero involutivity defect at some sample.
    pub first_noninvolutive: Option<usize>,
    /// Controllability indices `(ρ1, ρ2)`, `ρ1 ≤ ρ2`, when linearizable.
    pub brunovsky_indices: Option<(usize, usize)>,
    /// Steps whose rank differed across samples.
    pub flagged_steps: Vec<usize>,
    pub dim: usize,
}

impl LinearizabilityReport {
    pub fn from_filtration(filt: &Filtration) -> Self {
        let flagged_steps: Vec<usize> = filt
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.constant_rank)
            .map(|(j, _)| j)
            .collect();
        let first_noninvolutive = filt.steps.iter().position(|s| !s.involutive);
        let ranks = filt.ranks();
        let linearizable =
            flagged_steps.is_empty() && first_noninvolutive.is_none() && filt.final_rank() == filt.dim;
        let brunovsky_indices = linearizable.then(|| dual_partition(&ranks));
        LinearizabilityReport {
            linearizable,
            involutive: filt.steps.iter().map(|s| s.involutive).collect(),
            ranks,
            first_noninvolutive,
            brunovsky_indices,
            flagged_steps,
            dim: filt.dim,
        }
    }
}

/// Controllability indices from the rank increments of the filtration:
/// `ρ_i = #{ j : r_j − r_{j−1} ≥ i }`.
fn dual_partition(ranks: &[usize]) -> (usize, usize) {
    let mut prev = 0;
    let mut rho = [0usize; 2];
    for &r in ranks {
        let inc = r.saturating_sub(prev);
        prev = r;
        for (i, slot) in rho.iter_mut().enumerate() {
            if inc > i {
                *slot += 1;
            }
        }
    }
    (rho[0].min(rho[1]), rho[0].max(rho[1]))
}

pub fn static_feedback_linearizable(sys: &ControlAffineSystem, plan: &SamplePlan) -> Result<LinearizabilityReport> {
    Ok(LinearizabilityReport::from_filtration(&build_filtration(sys, plan)?))
}

pub fn brunovsky_indices(sys: &ControlAffineSystem, plan: &SamplePlan) -> Result<(usize, usize)> {
    static_feedback_linearizable(sys, plan)?
        .brunovsky_indices
        .ok_or(Error::NotLinearizable)
}

pub fn first_noninvolutive_index(sys: &ControlAffineSystem, plan: &SamplePlan) -> Result<Option<usize>> {
    Ok(static_feedback_linearizable(sys, plan)?.first_noninvolutive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::expr::Expr;
    use std::collections::BTreeMap;

    #[test]
    fn dual_partition_examples() {
        assert_eq!(dual_partition(&[2, 3, 4, 5]), (1, 4));
        assert_eq!(dual_partition(&[2, 4, 5]), (2, 3));
        assert_eq!(dual_partition(&[2, 4, 6, 7, 8]), (3, 5));
    }

    #[test]
    fn double_integrator() {
        // ẋ1 = x2, ẋ2 = u1; the second input is inert
        let st = vec!["x1".to_string(), "x2".to_string()];
        let f = VectorField::new(st.clone(), vec![Expr::var("x2"), Expr::zero()]).unwrap();
        let g1 = VectorField::basis(&st, 1);
        let g2 = VectorField::zero(&st);
        let sys = ControlAffineSystem::new(f, g1, g2, BTreeMap::new(), vec![0.0, 0.0]).unwrap();
        let rep = static_feedback_linearizable(&sys, &SamplePlan::default()).unwrap();
        assert!(rep.linearizable);
        assert_eq!(rep.ranks, vec![1, 2]);
    }
}
