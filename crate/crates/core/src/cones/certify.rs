//! The separability pipeline and an independent checker for its output.

use serde::{Deserialize, Serialize};

use super::factor::{cp_d3_decompose, cp_rank2_embed, cp_search, dd_factor, is_diag_dominant, CpFactorization, FACTOR_RTOL};
use super::sufficient::{cert_anna_matrix, search_jordis_matrix, AnnaCertificate, JordisCertificate};
use super::witness::{detection_threshold, witness_scan, witness_value, ScanBudget, Witness};
use crate::decomp::{verify_decomposition, zeta_decomposition, SeparableDecomposition};
use crate::ds_state::DsState;
use crate::matcore::{numerical_rank, partial_transpose_second, sym_eig, SymMatrix, Tolerance};
use crate::range_criterion::{range_criterion_test, RangeReport};

/// Dense reconstruction is skipped above this many `terms * d^4` operations.
const DENSE_CHECK_LIMIT: u128 = 400_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Separable,
    Entangled,
    Inconclusive,
}

/// How an explicit factor `B` with `B B^T = M` was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorRoute {
    Cholesky3,
    Rank2Embedding,
    DiagDominant,
    Anna(AnnaCertificate),
    Jordis(JordisCertificate),
    CpSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Citation {
    /// PPT is equivalent to separability for `d <= 4`.
    DimAtMost4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    /// The separable decomposition is the phase construction applied to `factor`.
    Decomposition { route: FactorRoute, factor: CpFactorization },
    TheoremCitation(Citation),
    WitnessViolation { witness: Witness, value: f64 },
    NptViolation { min_eigenvalue: f64 },
    RangeCriterionInfeasible(RangeReport),
    AttemptTrace(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityCertificate {
    pub verdict: Verdict,
    pub evidence: Evidence,
    /// One line per attempted step, in order.
    pub trace: Vec<String>,
}

impl SeparabilityCertificate {
    /// The product-vector decomposition for factor-based evidence.
    pub fn decomposition(&self) -> Option<SeparableDecomposition> {
        match &self.evidence {
            Evidence::Decomposition { factor, .. } => Some(zeta_decomposition(factor)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyBudget {
    pub seed: u64,
    /// Random restarts for the Jordis search and the CP search.
    pub restarts: usize,
    /// Iterations per CP-search restart.
    pub iters: usize,
    /// Cap on 5-subsets scanned with Horn witnesses.
    pub witness_subsets: usize,
    pub support_cap: u64,
    pub tol: Tolerance,
}

impl Default for CertifyBudget {
    fn default() -> Self {
        CertifyBudget {
            seed: 0,
            restarts: 4,
            iters: 1500,
            witness_subsets: 2000,
            support_cap: crate::range_criterion::DEFAULT_SUPPORT_CAP,
            tol: Tolerance::default(),
        }
    }
}

/// Cheapest and strongest evidence first; sub-step failures are recorded in the trace.
pub fn certify(rho: &DsState, budget: &CertifyBudget) -> SeparabilityCertificate {
    let tol = &budget.tol;
    let m_owned = rho.m_matrix();
    let m = m_owned.as_sym();
    let d = m.dim();
    let mut trace = Vec::new();

    let eig_min = sym_eig(m).min();
    if !rho.is_ppt(tol) {
        trace.push(format!("ppt: fails, min eigenvalue of M {eig_min:e}"));
        return done(Verdict::Entangled, Evidence::NptViolation { min_eigenvalue: eig_min }, trace);
    }
    trace.push("ppt: holds".into());

    if d == 2 {
        match accept(m, FactorRoute::Rank2Embedding, cp_rank2_embed(m, tol), &mut trace) {
            Some(c) => return c.with_trace(trace),
            None => return cite(trace),
        }
    }
    if d == 3 {
        match accept(m, FactorRoute::Cholesky3, cp_d3_decompose(m, tol), &mut trace) {
            Some(c) => return c.with_trace(trace),
            None => return cite(trace),
        }
    }

    let rank = numerical_rank(m, tol);
    if rank <= 2 {
        if let Some(c) = accept(m, FactorRoute::Rank2Embedding, cp_rank2_embed(m, tol), &mut trace) {
            return c.with_trace(trace);
        }
    } else {
        trace.push(format!("rank2: numerical rank {rank}"));
    }

    if is_diag_dominant(m) {
        if let Some(c) = accept(m, FactorRoute::DiagDominant, dd_factor(m), &mut trace) {
            return c.with_trace(trace);
        }
    } else {
        trace.push("diag-dominant: no".into());
    }

    match cert_anna_matrix(m, tol) {
        Ok(cert) => {
            let f = cert.factorization(m);
            if let Some(c) = accept(m, FactorRoute::Anna(cert), f, &mut trace) {
                return c.with_trace(trace);
            }
        }
        Err(e) => trace.push(format!("anna: {e}")),
    }

    match search_jordis_matrix(m, budget.restarts, tol, budget.seed) {
        Ok(cert) => {
            let f = cert.factorization(m);
            if let Some(c) = accept(m, FactorRoute::Jordis(cert), f, &mut trace) {
                return c.with_trace(trace);
            }
        }
        Err(e) => trace.push(format!("jordis: {e}")),
    }

    for k in [d, 2 * d] {
        match cp_search(m, k, budget.restarts, budget.iters, budget.seed) {
            Ok(f) => {
                if let Some(c) = accept(m, FactorRoute::CpSearch, Ok(f), &mut trace) {
                    return c.with_trace(trace);
                }
            }
            Err(e) => trace.push(format!("cp-search k={k}: {e}")),
        }
    }

    if d == 4 {
        return cite(trace);
    }

    let scan = ScanBudget {
        max_subsets: budget.witness_subsets,
        seed: budget.seed,
        ..ScanBudget::default()
    };
    match witness_scan(m, &scan) {
        Some(r) => {
            trace.push(format!("witness: value {:e}", r.value));
            return done(
                Verdict::Entangled,
                Evidence::WitnessViolation { witness: r.witness, value: r.value },
                trace,
            );
        }
        None => trace.push("witness: no violation found".into()),
    }

    match range_criterion_test(rho, tol, budget.support_cap) {
        Ok(report) if report.is_infeasible() => {
            trace.push("range: infeasible".into());
            return done(Verdict::Entangled, Evidence::RangeCriterionInfeasible(report), trace);
        }
        Ok(report) => trace.push(format!(
            "range: feasible on support {:?}",
            report.feasible_support.unwrap_or_default()
        )),
        Err(e) => trace.push(format!("range: {e}")),
    }

    let t = trace.clone();
    done(Verdict::Inconclusive, Evidence::AttemptTrace(t), trace)
}

struct Pending(Verdict, Evidence);

impl Pending {
    fn with_trace(self, trace: Vec<String>) -> SeparabilityCertificate {
        done(self.0, self.1, trace)
    }
}

fn done(verdict: Verdict, evidence: Evidence, trace: Vec<String>) -> SeparabilityCertificate {
    SeparabilityCertificate { verdict, evidence, trace }
}

fn cite(mut trace: Vec<String>) -> SeparabilityCertificate {
    trace.push("citing PPT = separable for d <= 4".into());
    done(Verdict::Separable, Evidence::TheoremCitation(Citation::DimAtMost4), trace)
}

fn accept(
    m: &SymMatrix,
    route: FactorRoute,
    f: crate::error::Result<CpFactorization>,
    trace: &mut Vec<String>,
) -> Option<Pending> {
    let name = route_name(&route);
    match f {
        Ok(f) if f.reproduces(m, FACTOR_RTOL) => {
            trace.push(format!("{name}: factor with {} columns", f.ncols()));
            Some(Pending(Verdict::Separable, Evidence::Decomposition { route, factor: f }))
        }
        Ok(f) => {
            trace.push(format!("{name}: residual {:e} too large", f.residual(m)));
            None
        }
        Err(e) => {
            trace.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn route_name(route: &FactorRoute) -> &'static str {
    match route {
        FactorRoute::Cholesky3 => "cholesky3",
        FactorRoute::Rank2Embedding => "rank2",
        FactorRoute::DiagDominant => "diag-dominant",
        FactorRoute::Anna(_) => "anna",
        FactorRoute::Jordis(_) => "jordis",
        FactorRoute::CpSearch => "cp-search",
    }
}

/// Re-checks a certificate from scratch, without reusing the pipeline's intermediate values.
pub fn verify_certificate(rho: &DsState, cert: &SeparabilityCertificate, tol: &Tolerance) -> bool {
    let d = rho.d();
    let rho_full = rho.full_density_matrix();
    match (&cert.verdict, &cert.evidence) {
        (Verdict::Separable, Evidence::Decomposition { factor, .. }) => {
            if factor.dim() != d || factor.b().iter().any(|&v| v < 0.0) {
                return false;
            }
            let dec = zeta_decomposition(factor);
            let cost = dec.len() as u128 * (d as u128).pow(4);
            if cost <= DENSE_CHECK_LIMIT {
                verify_decomposition(rho, &dec, tol)
            } else {
                // The phase construction reproduces exactly the DS state of B B^T.
                factor.reproduces(rho.m_matrix().as_sym(), FACTOR_RTOL)
            }
        }
        (Verdict::Separable, Evidence::TheoremCitation(Citation::DimAtMost4)) => {
            d <= 4 && dense_pt_min(&rho_full, d) >= -tol.psd_threshold(rho_full.spectral_norm())
        }
        (Verdict::Entangled, Evidence::NptViolation { .. }) => {
            dense_pt_min(&rho_full, d) < -tol.psd_threshold(rho_full.spectral_norm())
        }
        (Verdict::Entangled, Evidence::WitnessViolation { witness, .. }) => {
            let Some(Ok(rebuilt)) = Witness::rebuild(&witness.provenance, d) else {
                return false;
            };
            if rebuilt.w.dim() != d || (rebuilt.w.as_matrix() - witness.w.as_matrix()).amax() > 1e-12 {
                return false;
            }
            let m = rho.m_matrix();
            witness_value(&rebuilt, m.as_sym())
                .is_ok_and(|v| v < detection_threshold(m.as_sym().frobenius_norm()))
        }
        (Verdict::Entangled, Evidence::RangeCriterionInfeasible(_)) => {
            range_criterion_test(rho, tol, u64::MAX).is_ok_and(|r| r.is_infeasible())
        }
        (Verdict::Inconclusive, _) => true,
        _ => false,
    }
}

fn dense_pt_min(rho_full: &SymMatrix, d: usize) -> f64 {
    let pt = partial_transpose_second(rho_full.as_matrix(), d, d);
    sym_eig(&SymMatrix::from_matrix(pt).expect("square")).min()
}
