//! Load a system from its JSON document and report the distribution
//! filtration, linearizability and the smallest linearizing prolongation.

use flat5::distributions::SamplePlan;
use flat5::documents::{from_json, AnalysisDocument, SystemDocument};
use flat5::linearizability::static_feedback_linearizable;
use flat5::prolongation::{ddiff_certificate, FeedbackTransformation};

const SYSTEM: &str = r#"{
  "schema": "flat5/1",
  "state": ["z1", "z2", "z3", "z4", "z5"],
  "f":  ["0", "z3", "z4", "k*z1*z5", "0"],
  "g1": ["1", "0", "0", "z5", "0"],
  "g2": ["0", "0", "0", "0", "1"],
  "parameters": {"k": 0.5},
  "base_point": [0.1, 0.0, 0.2, 0.0, 0.3],
  "v0": [1.0, 0.0]
}"#;

fn main() {
    let doc: SystemDocument = from_json(SYSTEM).unwrap();
    let sys = doc.to_system().unwrap();
    let plan = SamplePlan::default();

    let report = static_feedback_linearizable(&sys, &plan).unwrap();
    println!("ranks of D^j: {:?}", report.ranks);
    println!("involutive:   {:?}", report.involutive);
    println!("linearizable: {}", report.linearizable);

    let cert = ddiff_certificate(&sys, &FeedbackTransformation::identity(), &plan, 3).unwrap();
    match &cert {
        Some(c) => println!("linearizable after prolonging u1 {} time(s); ranks {:?}", c.p, c.report.ranks),
        None => println!("no prolongation up to order 3 linearizes the system"),
    }

    let analysis = AnalysisDocument::new(&report, cert.as_ref());
    println!("{}", flat5::documents::to_json(&analysis));
}
