//! Car with second-order steering reduced to NF''9 with flat output (x, y).

use flat5::case_studies::{car_steering_example, verify_example_reduction};
use flat5::distributions::SamplePlan;
use flat5::prolongation::ddiff_certificate;

fn main() {
    let ex = car_steering_example().unwrap();
    println!("coordinates:");
    for (i, c) in ex.coordinates.iter().enumerate() {
        println!("  z{} = {c}", i + 1);
    }
    let det = ex.coordinate_jacobian_determinant(&ex.system.base).unwrap();
    println!("det dz/dx at the base point: {det:.4}");

    let plan = SamplePlan::default().with_count(100);
    println!("reduction residual: {:.1e}", verify_example_reduction(&ex, &plan).unwrap());
    println!("flat output pulls back to (x, y): {}", ex.flat_output_pulls_back().unwrap());

    let cert = ddiff_certificate(&ex.system, &ex.feedback, &SamplePlan::default(), 3).unwrap().unwrap();
    println!("ddiff {} (ranks {:?})", cert.p, cert.report.ranks);
    for (p, f) in cert.failures.iter().enumerate() {
        println!("  p = {p}: ranks {:?}, first noninvolutive {:?}", f.ranks, f.first_noninvolutive);
    }
}
