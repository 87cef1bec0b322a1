//! Controllability indices of the two linear catalogue rows.

use std::collections::BTreeMap;

use flat5::distributions::SamplePlan;
use flat5::linearizability::static_feedback_linearizable;
use flat5::normal_forms::{build_normal_form, BasePoint, NormalFormSpec, Variant};

fn main() {
    let base = BasePoint::new([0.0; 5], [1.0, 0.0]);
    for variant in [Variant::Nf1, Variant::NfPrime1] {
        let spec = NormalFormSpec::normalized(variant, [], BTreeMap::new(), base).unwrap();
        let report = static_feedback_linearizable(&build_normal_form(&spec), &SamplePlan::default()).unwrap();
        let (r1, r2) = report.brunovsky_indices.unwrap();
        println!("{variant:5} ranks {:?} -> integrator chains of lengths ({r1}, {r2})", report.ranks);
    }
}
