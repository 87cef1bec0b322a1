//! Input and structural regularity of catalogue members, including a
//! member placed exactly on its singular set.

use std::collections::BTreeMap;

use flat5::catalogue::random_spec;
use flat5::distributions::SamplePlan;
use flat5::expr::parse_expr;
use flat5::normal_forms::{
    input_regularity_margin, structural_regularity_report, BasePoint, NormalFormSpec, Slot, Variant, STATE,
};

fn main() {
    let plan = SamplePlan::default();
    for variant in [Variant::Nf3, Variant::NfPrime6, Variant::NfDouble12, Variant::Nf13] {
        let spec = random_spec(variant, 1).unwrap();
        let report = structural_regularity_report(&spec, &plan).unwrap();
        println!("{variant}: input margin {:?}", report.input_margin);
        for c in &report.structural {
            println!("    {} satisfied={} ({})", c.tag, c.satisfied, c.evidence);
        }
    }

    // ∂a1/∂z5 + v10 = 0: NF2 on its singular set
    let a1 = parse_expr("-z5 + z1*z2", &STATE).unwrap();
    let spec = NormalFormSpec::normalized(
        Variant::Nf2,
        [(Slot::A1, a1)],
        BTreeMap::new(),
        BasePoint::new([0.0; 5], [1.0, 0.0]),
    )
    .unwrap();
    println!("NF2 with a1 = -z5 + z1 z2, v10 = 1: {:?}", input_regularity_margin(&spec).unwrap());
}
