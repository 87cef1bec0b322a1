//! Command implementations behind the `flat5` binary. Each returns the
//! text to print and the process exit code instead of printing, so the
//! commands can be driven from tests.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::case_studies::{example_by_name, verify_example_reduction};
use crate::distributions::SamplePlan;
use crate::documents::{
    from_json, read_json, to_json, AnalysisDocument, CurveDocument, DdiffSummary, FeedbackDocument,
    NormalFormDocument, SystemDocument,
};
use crate::error::{Error, Result};
use crate::flat::{parametrize_trajectory, TimeGrid};
use crate::linearizability::static_feedback_linearizable;
use crate::normal_forms::{build_normal_form, structural_regularity_report, InputMargin, NormalFormSpec};
use crate::prolongation::{ddiff_certificate, FeedbackTransformation, OutputDependence};
use crate::verification::trajectory_roundtrip_error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// `analyze`: some distribution changed rank across samples.
pub const EXIT_RANK_FLAGS: i32 = 2;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn failure(e: &Error) -> Self {
        let code = match e {
            Error::SingularNode { .. } => EXIT_SINGULAR,
            _ => EXIT_ERROR,
        };
        Outcome {
            stdout: error_payload(e),
            stderr: format!("error: {e}\n"),
            code,
        }
    }
}

pub fn error_payload(e: &Error) -> String {
    let mut detail = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::SingularNode { node, t, margin } = e {
        detail["node"] = json!(node);
        detail["t"] = json!(t);
        detail["margin"] = json!(margin);
    }
    to_json(&json!({ "schema": crate::documents::SCHEMA, "error": detail })) + "\n"
}

/// Sampling and prolongation settings shared by the commands.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub plan: SamplePlan,
    pub max_p: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            plan: SamplePlan::default(),
            max_p: 3,
        }
    }
}

enum Input {
    System(Box<SystemDocument>),
    Form(Box<NormalFormDocument>),
}

fn read_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = from_json(&text)?;
    if value.get("variant").is_some() {
        Ok(Input::Form(Box::new(from_json(&text)?)))
    } else {
        Ok(Input::System(Box::new(from_json(&text)?)))
    }
}

fn analyze(path: &Path, feedback: Option<&Path>, opts: &AnalysisOptions) -> Result<AnalysisDocument> {
    let (sys, spec) = match read_input(path)? {
        Input::System(doc) => (doc.to_system()?, None),
        Input::Form(doc) => {
            let spec = doc.to_spec()?;
            (build_normal_form(&spec), Some(spec))
        }
    };
    let t = match feedback {
        Some(p) => read_json::<FeedbackDocument>(p)?.to_feedback(&sys)?,
        None => FeedbackTransformation::identity(),
    };
    let report = static_feedback_linearizable(&sys, &opts.plan)?;
    let cert = ddiff_certificate(&sys, &t, &opts.plan, opts.max_p)?;
    let mut doc = AnalysisDocument::new(&report, cert.as_ref());
    doc.regularity.insert(
        "feedback_determinant".into(),
        t.determinant().evaluate(&sys.base_assignment())?.abs(),
    );
    match &cert {
        None => doc
            .warnings
            .push(format!("no prolongation of order <= {} linearizes the system", opts.max_p)),
        Some(c) if c.output_dependence == OutputDependence::Unchecked => doc
            .warnings
            .push("ddiff 3: state-only dependence of the linearizing output was not verified".into()),
        Some(_) => {}
    }
    if let Some(spec) = spec {
        regularity_entries(&spec, &opts.plan, &mut doc)?;
    }
    let mut flagged: Vec<String> = Vec::new();
    if !report.flagged_steps.is_empty() {
        flagged.push(format!("rank of D^j varies near the base point for j in {:?}", report.flagged_steps));
    }
    for f in cert.iter().flat_map(|c| c.failures.iter()) {
        if !f.flagged_steps.is_empty() {
            flagged.push(format!("prolonged system: rank varies for j in {:?}", f.flagged_steps));
        }
    }
    doc.warnings.extend(flagged);
    Ok(doc)
}

fn regularity_entries(spec: &NormalFormSpec, plan: &SamplePlan, doc: &mut AnalysisDocument) -> Result<()> {
    let r = structural_regularity_report(spec, plan)?;
    match r.input_margin {
        InputMargin::NoCondition => {}
        InputMargin::Value(v) => {
            doc.regularity.insert("input_margin".into(), v);
            if v <= 1e-8 {
                doc.warnings.push("base data violates the input regularity condition".into());
            }
        }
    }
    for c in &r.structural {
        if !c.satisfied {
            doc.warnings.push(format!("structural condition {} fails: {}", c.tag, c.evidence));
        }
    }
    Ok(())
}

/// `analyze`: filtration, linearizability and ddiff certificate of a
/// system or normal-form document. Exit 2 when a rank flag was raised.
pub fn run_analyze(input: &Path, feedback: Option<&Path>, opts: &AnalysisOptions) -> Outcome {
    match analyze(input, feedback, opts) {
        Ok(doc) => {
            let flagged = !doc.flagged_steps.is_empty()
                || doc
                    .ddiff
                    .iter()
                    .flat_map(|d| d.failures.iter())
                    .any(|f| !f.flagged_steps.is_empty());
            let mut out = Outcome::ok(to_json(&doc) + "\n");
            if flagged {
                out.code = EXIT_RANK_FLAGS;
            }
            out
        }
        Err(e) => Outcome::failure(&e),
    }
}

/// Time grid options for `parametrize` and `verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            t0: 0.0,
            t1: 1.0,
            dt: 1e-4,
        }
    }
}

fn load_form_and_curve(
    form: &Path,
    curve: &Path,
    grid: &GridOptions,
) -> Result<(NormalFormSpec, crate::flat::FlatOutputCurve, TimeGrid)> {
    let spec = read_json::<NormalFormDocument>(form)?.to_spec()?;
    let curve = read_json::<CurveDocument>(curve)?.to_curve()?;
    let grid = TimeGrid::new(grid.t0, grid.t1, grid.dt)?;
    Ok((spec, curve, grid))
}

/// `parametrize`: writes the trajectory CSV (to `out`, or stdout) and a
/// JSON summary. Exit 3 at a flatness singularity.
pub fn run_parametrize(form: &Path, curve: &Path, grid: &GridOptions, out: Option<&PathBuf>) -> Outcome {
    let run = || -> Result<Outcome> {
        let (spec, curve, grid) = load_form_and_curve(form, curve, grid)?;
        let traj = parametrize_trajectory(&spec, &curve, &grid)?;
        let summary = json!({
            "schema": crate::documents::SCHEMA,
            "variant": spec.variant().tag(),
            "nodes": traj.t.len(),
            "orders": [traj.orders.0, traj.orders.1],
            "differential_weight": traj.differential_weight(),
            "min_margin": traj.min_margin(),
        });
        let summary = to_json(&summary) + "\n";
        match out {
            Some(path) => {
                traj.write_csv(BufWriter::new(File::create(path)?))?;
                Ok(Outcome::ok(summary))
            }
            None => {
                let mut buf = Vec::new();
                traj.write_csv(&mut buf)?;
                Ok(Outcome {
                    stdout: String::from_utf8(buf).expect("ascii csv"),
                    stderr: summary,
                    code: EXIT_OK,
                })
            }
        }
    };
    run().unwrap_or_else(|e| Outcome::failure(&e))
}

/// `verify`: round-trip error of the parametrization, regularity of the
/// base data, and the form's ddiff certificate.
pub fn run_verify(form: &Path, curve: &Path, grid: &GridOptions, opts: &AnalysisOptions) -> Outcome {
    let run = || -> Result<Outcome> {
        let (spec, curve, grid) = load_form_and_curve(form, curve, &grid.clone())?;
        let traj = parametrize_trajectory(&spec, &curve, &grid)?;
        let error = trajectory_roundtrip_error(&spec, &traj, &grid)?;
        let regularity = structural_regularity_report(&spec, &opts.plan)?;
        let sys = build_normal_form(&spec);
        let cert = ddiff_certificate(&sys, &FeedbackTransformation::identity(), &opts.plan, opts.max_p)?;
        let expected = spec.variant().profile().ok();
        let doc = json!({
            "schema": crate::documents::SCHEMA,
            "variant": spec.variant().tag(),
            "roundtrip_error": error,
            "min_margin": traj.min_margin(),
            "measured_differential_weight": traj.differential_weight(),
            "expected_differential_weight": expected.as_ref().map(|p| p.differential_weight),
            "input_margin": regularity.input_margin.value(),
            "structural": regularity.structural.iter().map(|c| json!({
                "condition": c.tag, "satisfied": c.satisfied, "evidence": c.evidence,
            })).collect::<Vec<_>>(),
            "ddiff": cert.as_ref().map(DdiffSummary::from_certificate),
            "expected_ddiff": expected.as_ref().map(|p| p.ddiff),
        });
        Ok(Outcome::ok(to_json(&doc) + "\n"))
    };
    run().unwrap_or_else(|e| Outcome::failure(&e))
}

/// `demo motor|car`: the worked reduction's residual and the original
/// system's analysis under the example feedback.
pub fn run_demo(name: &str, opts: &AnalysisOptions) -> Outcome {
    let ex = match name {
        "motor" | "car" => example_by_name(name),
        other => {
            return Outcome {
                stdout: error_payload(&Error::InvalidSpec(format!("unknown demo `{other}`"))),
                stderr: format!("usage: flat5 demo <motor|car> (got `{other}`)\n"),
                code: EXIT_USAGE,
            }
        }
    };
    let run = || -> Result<Outcome> {
        let ex = ex?;
        let sample_plan = SamplePlan {
            count: opts.plan.count.max(100),
            ..opts.plan.clone()
        };
        let residual = verify_example_reduction(&ex, &sample_plan)?;
        let report = static_feedback_linearizable(&ex.system, &opts.plan)?;
        let cert = ddiff_certificate(&ex.system, &ex.feedback, &opts.plan, opts.max_p)?;
        let analysis = AnalysisDocument::new(&report, cert.as_ref());
        let doc = json!({
            "schema": crate::documents::SCHEMA,
            "example": ex.name,
            "target": ex.target.variant().tag(),
            "reduction_residual": residual,
            "flat_output": ex.flat_output.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "flat_output_pulls_back": ex.flat_output_pulls_back()?,
            "target_form": NormalFormDocument::from_spec(&ex.target),
            "analysis": analysis,
        });
        Ok(Outcome::ok(to_json(&doc) + "\n"))
    };
    run().unwrap_or_else(|e| Outcome::failure(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_demo_is_a_usage_error() {
        let out = run_demo("boat", &AnalysisOptions::default());
        assert_eq!(out.code, EXIT_USAGE);
        assert!(out.stdout.contains("invalid_spec"));
    }

    #[test]
    fn payload_carries_node() {
        let p = error_payload(&Error::SingularNode {
            node: 4,
            t: 0.5,
            margin: 0.0,
        });
        let v: serde_json::Value = serde_json::from_str(&p).unwrap();
        assert_eq!(v["error"]["node"], 4);
        assert_eq!(v["error"]["kind"], "singular_node");
    }
}
