//! JSON documents exchanged with the command line: systems, feedback,
//! normal forms, flat-output curves and analysis reports. Every document
//! carries `"schema": "flat5/1"` and rejects unknown fields.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr_with, Expr};
use crate::field::{ControlAffineSystem, VectorField};
use crate::flat::FlatOutputCurve;
use crate::linearizability::LinearizabilityReport;
use crate::normal_forms::{BasePoint, NormalFormSpec, Slot, Variant, STATE};
use crate::prolongation::{DdiffCertificate, FeedbackTransformation, OutputDependence};

pub const SCHEMA: &str = "flat5/1";

fn check_schema(found: &str) -> Result<()> {
    if found == SCHEMA {
        Ok(())
    } else {
        Err(Error::Document(format!("schema `{found}`, expected `{SCHEMA}`")))
    }
}

fn schema() -> String {
    SCHEMA.to_string()
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

fn parse_all(sources: &[String], known: &dyn Fn(&str) -> bool) -> Result<Vec<Expr>> {
    sources.iter().map(|s| parse_expr_with(s, &known)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub schema: String,
    pub state: Vec<String>,
    pub f: Vec<String>,
    pub g1: Vec<String>,
    pub g2: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub base_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdot0: Option<[f64; 2]>,
}

impl SystemDocument {
    pub fn to_system(&self) -> Result<ControlAffineSystem> {
        check_schema(&self.schema)?;
        let known = |n: &str| self.state.iter().any(|s| s == n) || self.parameters.contains_key(n);
        let field = |src: &[String]| -> Result<VectorField> { VectorField::new(self.state.clone(), parse_all(src, &known)?) };
        Ok(ControlAffineSystem::new(
            field(&self.f)?,
            field(&self.g1)?,
            field(&self.g2)?,
            self.parameters.clone(),
            self.base_point.clone(),
        )?
        .with_inputs(self.v0, self.vdot0))
    }

    pub fn from_system(sys: &ControlAffineSystem) -> Self {
        let strings = |f: &VectorField| f.components().iter().map(Expr::to_string).collect();
        SystemDocument {
            schema: schema(),
            state: sys.state().to_vec(),
            f: strings(&sys.drift),
            g1: strings(&sys.g1),
            g2: strings(&sys.g2),
            parameters: sys.parameters.clone(),
            base_point: sys.base.clone(),
            v0: sys.v0,
            vdot0: sys.vdot0,
        }
    }
}

/// `u = α + β ũ`; `beta[i][j]` multiplies `ũ_j` in `u_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackDocument {
    pub schema: String,
    pub alpha: [String; 2],
    pub beta: [[String; 2]; 2],
}

impl FeedbackDocument {
    pub fn to_feedback(&self, sys: &ControlAffineSystem) -> Result<FeedbackTransformation> {
        check_schema(&self.schema)?;
        let known = |n: &str| sys.state().iter().any(|s| s == n) || sys.parameters.contains_key(n);
        let p = |s: &String| parse_expr_with(s, &known);
        Ok(FeedbackTransformation {
            alpha: [p(&self.alpha[0])?, p(&self.alpha[1])?],
            beta: [
                [p(&self.beta[0][0])?, p(&self.beta[0][1])?],
                [p(&self.beta[1][0])?, p(&self.beta[1][1])?],
            ],
        })
    }
}

/// A catalogue form. Omitted mandated fixings are filled in; omitted free
/// slots are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormDocument {
    pub schema: String,
    pub variant: Variant,
    #[serde(default)]
    pub nonlinearities: BTreeMap<Slot, String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub z0: [f64; 5],
    pub v0: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vdot0: Option<[f64; 2]>,
}

impl NormalFormDocument {
    pub fn to_spec(&self) -> Result<NormalFormSpec> {
        check_schema(&self.schema)?;
        let known = |n: &str| STATE.contains(&n) || self.parameters.contains_key(n);
        let free = self
            .nonlinearities
            .iter()
            .map(|(slot, src)| Ok((*slot, parse_expr_with(src, &known)?)))
            .collect::<Result<Vec<_>>>()?;
        let base = BasePoint {
            z0: self.z0,
            v0: self.v0,
            vdot0: self.vdot0,
        };
        NormalFormSpec::normalized(self.variant, free, self.parameters.clone(), base)
    }

    pub fn from_spec(spec: &NormalFormSpec) -> Self {
        let base = spec.base();
        NormalFormDocument {
            schema: schema(),
            variant: spec.variant(),
            nonlinearities: spec.nonlinearities().iter().map(|(s, e)| (*s, e.to_string())).collect(),
            parameters: spec.parameters().clone(),
            z0: base.z0,
            v0: base.v0,
            vdot0: base.vdot0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub schema: String,
    /// Coefficients in ascending powers of `t`.
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl CurveDocument {
    pub fn to_curve(&self) -> Result<FlatOutputCurve> {
        check_schema(&self.schema)?;
        FlatOutputCurve::new(self.phi1.clone(), self.phi2.clone())
    }

    pub fn from_curve(c: &FlatOutputCurve) -> Self {
        CurveDocument {
            schema: schema(),
            phi1: c.phi[0].clone(),
            phi2: c.phi[1].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSummary {
    pub p: usize,
    pub ranks: Vec<usize>,
    pub first_noninvolutive: Option<usize>,
    pub flagged_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdiffSummary {
    pub p: usize,
    pub ranks: Vec<usize>,
    pub brunovsky_indices: Option<[usize; 2]>,
    pub failures: Vec<FailureSummary>,
    /// `automatic` (p ≤ 2) or `unchecked`.
    pub output_dependence: String,
}

impl DdiffSummary {
    pub fn from_certificate(c: &DdiffCertificate) -> Self {
        DdiffSummary {
            p: c.p,
            ranks: c.report.ranks.clone(),
            brunovsky_indices: c.report.brunovsky_indices.map(|(a, b)| [a, b]),
            failures: c
                .failures
                .iter()
                .enumerate()
                .map(|(p, r)| FailureSummary {
                    p,
                    ranks: r.ranks.clone(),
                    first_noninvolutive: r.first_noninvolutive,
                    flagged_steps: r.flagged_steps.clone(),
                })
                .collect(),
            output_dependence: match c.output_dependence {
                OutputDependence::Automatic => "automatic",
                OutputDependence::Unchecked => "unchecked",
            }
            .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDocument {
    pub schema: String,
    pub dim: usize,
    pub ranks: Vec<usize>,
    pub involutive: Vec<bool>,
    /// First noninvolutive index `k`.
    pub first_noninvolutive: Option<usize>,
    pub linearizable: bool,
    pub brunovsky_indices: Option<[usize; 2]>,
    pub flagged_steps: Vec<usize>,
    pub ddiff: Option<DdiffSummary>,
    pub regularity: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl AnalysisDocument {
    pub fn new(report: &LinearizabilityReport, ddiff: Option<&DdiffCertificate>) -> Self {
        AnalysisDocument {
            schema: schema(),
            dim: report.dim,
            ranks: report.ranks.clone(),
            involutive: report.involutive.clone(),
            first_noninvolutive: report.first_noninvolutive,
            linearizable: report.linearizable,
            brunovsky_indices: report.brunovsky_indices.map(|(a, b)| [a, b]),
            flagged_steps: report.flagged_steps.clone(),
            ddiff: ddiff.map(DdiffSummary::from_certificate),
            regularity: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nf2_json() -> &'static str {
        r#"{"schema": "flat5/1", "variant": "NF2", "nonlinearities": {"a1": "z1*z5"},
            "z0": [0, 0, 0, 0, 0], "v0": [1, 0]}"#
    }

    #[test]
    fn normal_form_document_fills_fixings() {
        let doc: NormalFormDocument = from_json(nf2_json()).unwrap();
        let spec = doc.to_spec().unwrap();
        assert_eq!(spec.slot(Slot::A2), Expr::var("z5"));
        assert_eq!(spec.slot(Slot::B1), Expr::var("z4"));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"schema": "flat5/1", "phi1": [0, 1], "phi2": [0], "extra": 1}"#;
        assert!(matches!(from_json::<CurveDocument>(text), Err(Error::Document(_))));
    }

    #[test]
    fn wrong_schema_rejected() {
        let doc = CurveDocument {
            schema: "flat5/0".into(),
            phi1: vec![0.0],
            phi2: vec![0.0],
        };
        assert!(doc.to_curve().is_err());
    }

    #[test]
    fn system_round_trip() {
        let text = r#"{"schema": "flat5/1", "state": ["a", "b"],
            "f": ["b*sin(a) - k*a^(-2)", "-(3.5e-1)"], "g1": ["0", "1"], "g2": ["exp(a)/b", "0"],
            "parameters": {"k": 2}, "base_point": [1, 2]}"#;
        let doc: SystemDocument = from_json(text).unwrap();
        let sys = doc.to_system().unwrap();
        let again = SystemDocument::from_system(&sys).to_system().unwrap();
        assert_eq!(again, sys);
    }
}
