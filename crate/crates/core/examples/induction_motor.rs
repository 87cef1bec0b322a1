//! Induction motor reduced to NF'6 with flat output (ω, ρ).

use flat5::case_studies::{induction_motor_example, verify_example_reduction};
use flat5::distributions::SamplePlan;
use flat5::prolongation::ddiff_certificate;

fn main() {
    let ex = induction_motor_example().unwrap();
    println!("coordinates:");
    for (i, c) in ex.coordinates.iter().enumerate() {
        println!("  z{} = {c}", i + 1);
    }
    println!("target {} with a2 = {}", ex.target.variant(), ex.target.slot(flat5::normal_forms::Slot::A2));

    let plan = SamplePlan::default().with_count(100);
    println!("reduction residual: {:.1e}", verify_example_reduction(&ex, &plan).unwrap());
    println!("flat output pulls back to (omega, rho): {}", ex.flat_output_pulls_back().unwrap());

    let cert = ddiff_certificate(&ex.system, &ex.feedback, &SamplePlan::default(), 3).unwrap().unwrap();
    println!("ddiff {} (ranks {:?})", cert.p, cert.report.ranks);
}
