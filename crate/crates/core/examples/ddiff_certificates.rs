//! Reproduce the catalogue's ddiff column on randomly drawn members of
//! every row.

use flat5::catalogue::random_spec;
use flat5::distributions::SamplePlan;
use flat5::normal_forms::{build_normal_form, Variant};
use flat5::prolongation::{ddiff_certificate, FeedbackTransformation};

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let plan = SamplePlan::default();
    println!("{:<8} {:>8} {:>10}", "form", "expected", "measured");
    for variant in Variant::SPECIALIZED {
        let expected = variant.profile().unwrap().ddiff;
        let measured: Vec<String> = (0..seeds)
            .map(|seed| {
                let sys = build_normal_form(&random_spec(variant, seed).unwrap());
                match ddiff_certificate(&sys, &FeedbackTransformation::identity(), &plan, 3).unwrap() {
                    Some(c) => c.p.to_string(),
                    None => "-".into(),
                }
            })
            .collect();
        println!("{:<8} {:>8} {:>10}", variant.tag(), expected, measured.join(" "));
    }
}
