//! Report and decomposition files written by the CLI.

use dssep::cones::certify::route_name;
use dssep::cones::{CertifyBudget, CpFactorization, Evidence};
use dssep::decomp::verify_decomposition;
use dssep::{verify_certificate, SeparabilityCertificate, SeparableDecomposition, Tolerance, Verdict};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statefile::{ParseError, State, StateFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub version: String,
    pub input: StateFile,
    /// Weights were rescaled to unit trace before analysis.
    pub normalize: bool,
    pub budget: CertifyBudget,
    pub verdict: Verdict,
    pub route: Option<String>,
    pub evidence: Evidence,
    pub trace: Vec<String>,
}

impl CertificateReport {
    pub fn new(input: StateFile, normalize: bool, budget: CertifyBudget, cert: SeparabilityCertificate) -> Self {
        let route = match &cert.evidence {
            Evidence::Decomposition { route, .. } => Some(route_name(route).to_string()),
            _ => None,
        };
        CertificateReport {
            version: crate::statefile::FORMAT_VERSION.into(),
            input,
            normalize,
            budget,
            verdict: cert.verdict,
            route,
            evidence: cert.evidence,
            trace: cert.trace,
        }
    }

    pub fn certificate(&self) -> SeparabilityCertificate {
        SeparabilityCertificate {
            verdict: self.verdict,
            evidence: self.evidence.clone(),
            trace: self.trace.clone(),
        }
    }

    /// Rebuilds the state from `input` and re-checks the evidence.
    pub fn verify(&self) -> Result<bool, LoadError> {
        match self.input.to_state(self.normalize)? {
            State::Bipartite(rho) => Ok(verify_certificate(&rho, &self.certificate(), &self.budget.tol)),
            State::Multiqubit(_) => Err(LoadError::WrongKind),
        }
    }

    /// Parses a report and rejects it unless the evidence re-verifies.
    pub fn load(text: &str) -> Result<Self, LoadError> {
        let report: CertificateReport = serde_json::from_str(text)?;
        if report.verdict != Verdict::Inconclusive && !report.verify()? {
            return Err(LoadError::Unverified);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub version: String,
    pub input: StateFile,
    pub normalize: bool,
    pub method: String,
    pub factor: CpFactorization,
    pub decomposition: SeparableDecomposition,
}

impl DecompositionFile {
    pub fn verify(&self) -> Result<bool, LoadError> {
        match self.input.to_state(self.normalize)? {
            State::Bipartite(rho) => Ok(verify_decomposition(&rho, &self.decomposition, &Tolerance::default())),
            State::Multiqubit(_) => Err(LoadError::WrongKind),
        }
    }

    pub fn load(text: &str) -> Result<Self, LoadError> {
        let file: DecompositionFile = serde_json::from_str(text)?;
        if !file.verify()? {
            return Err(LoadError::Unverified);
        }
        Ok(file)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("embedded state: {0}")]
    State(#[from] ParseError),
    #[error("embedded state is not a bipartite DS state")]
    WrongKind,
    #[error("evidence does not re-verify against the embedded state")]
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub version: String,
    pub input: StateFile,
    pub normalize: bool,
    pub subset: Vec<usize>,
    /// `(w, v)` pairs subtracted as `w v v^T` before evaluation.
    pub projectors: Vec<(f64, Vec<f64>)>,
    pub value: f64,
    pub threshold: f64,
    /// `value < threshold`: the evaluated matrix is not completely positive.
    pub detected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    pub value: f64,
    pub expected: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiqubitReport {
    pub version: String,
    pub input: StateFile,
    pub tolerance: Tolerance,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppt: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pt_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extremality: Option<usize>,
    pub ppt_entangled: Option<bool>,
    pub trace: TraceCheck,
}
