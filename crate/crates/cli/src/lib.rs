//! Command-line front end for `dssep`.

pub mod json;
pub mod report;
pub mod statefile;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dssep::cones::{
    certify, cp_d3_decompose, cp_rank2_embed, cp_search, horn_matrix, lift_witness, witness_value, CertifyBudget,
    CpFactorization, Evidence,
};
use dssep::cones::witness::detection_threshold;
use dssep::decomp::{verify_decomposition, zeta_decomposition};
use dssep::multiqubit::{self, family_rho, min_pt_eigenvalue, SymmetricNQubitState};
use dssep::range_criterion::subtract_rank_one;
use dssep::{verify_certificate, DsState, Error, Tolerance, Verdict};

use report::{CertificateReport, DecompositionFile, MultiqubitReport, TraceCheck, WitnessReport};
use statefile::{State, StateFile};

pub mod exit {
    pub const SEPARABLE: i32 = 0;
    pub const ENTANGLED: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    pub const NOT_CERTIFIED: i32 = 3;
    pub const USAGE: i32 = 64;
    pub const DATA: i32 = 65;
    pub const SOFTWARE: i32 = 70;
    pub const IO: i32 = 74;
}

#[derive(Debug, Parser)]
#[command(name = "dssep", version, about = "Separability certificates for diagonal symmetric states")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Overrides the eigenvalue slack and the rank cutoff.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of 5-index subsets tried by the witness scan.
    #[arg(long, global = true, value_name = "INT")]
    pub budget: Option<usize>,
    /// Rescale weights to unit trace.
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Write the report (or decomposition) here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the certification pipeline on a state file.
    Analyze { input: PathBuf },
    /// Evaluate a lifted Horn witness on M(rho).
    Witness {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = WitnessKind::Horn)]
        witness: WitnessKind,
        /// Five distinct indices; defaults to 0,1,2,3,4.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        /// `w:v0,v1,...`; subtracts `w v v^T` from M(rho) first.
        #[arg(long, value_name = "W:V")]
        projector: Vec<String>,
    },
    /// Analyze the odd-N GHZ-coherence family.
    Family {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        z: f64,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = FamilyReportKind::All)]
        report: FamilyReportKind,
        /// Write the state as a multiqubit state file.
        #[arg(long, value_name = "PATH")]
        emit: Option<PathBuf>,
    },
    /// Write an explicit product-state decomposition.
    Decompose {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Analyze the built-in 4-qubit example.
    Example4 {
        #[arg(long, value_name = "PATH")]
        emit: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessKind {
    Horn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyReportKind {
    Ranks,
    Ppt,
    Extremality,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    D3,
    Rank2,
    Zeta,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

/// Output of a successful run: exit code plus the text for standard output.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let g = &cli.global;
    let tol = match g.tol {
        Some(t) => Tolerance::uniform(t).map_err(|e| Failure::new(exit::USAGE, format!("--tol: {e}")))?,
        None => Tolerance::default(),
    };
    let mut budget = CertifyBudget {
        seed: g.seed,
        tol,
        ..CertifyBudget::default()
    };
    if let Some(b) = g.budget {
        budget.witness_subsets = b;
    }
    match &cli.command {
        Command::Analyze { input } => analyze(g, &budget, input),
        Command::Witness {
            input,
            witness: WitnessKind::Horn,
            subset,
            projector,
        } => witness(g, input, subset.as_deref(), projector),
        Command::Family {
            n,
            z,
            sigma,
            report,
            emit,
        } => {
            let state = family_rho(*n, *z, *sigma).map_err(|e| {
                let hint = if *n % 2 == 0 {
                    "; for the even-N example use `dssep example4`"
                } else {
                    ""
                };
                Failure::new(exit::DATA, format!("{e}{hint}"))
            })?;
            let expected = 2.0 * (4.0 + z).powi((n / 2) as i32);
            multiqubit_report(g, &tol, &state, *report, expected, emit.as_deref())
        }
        Command::Example4 { emit } => {
            let state = multiqubit::example_4qubit();
            let expected = state.normalization();
            multiqubit_report(g, &tol, &state, FamilyReportKind::All, expected, emit.as_deref())
        }
        Command::Decompose { input, method } => decompose(g, &budget, input, *method),
    }
}

fn load(path: &Path, normalize: bool) -> Result<(StateFile, State), Failure> {
    let file = StateFile::read(path).map_err(|e| Failure::new(exit::USAGE, format!("{}: {e}", path.display())))?;
    let state = file
        .to_state(normalize)
        .map_err(|e| Failure::new(exit::USAGE, format!("{}: {e}", path.display())))?;
    Ok((file, state))
}

fn load_bipartite(path: &Path, normalize: bool) -> Result<(StateFile, DsState), Failure> {
    match load(path, normalize)? {
        (file, State::Bipartite(rho)) => Ok((file, rho)),
        _ => Err(Failure::new(
            exit::USAGE,
            format!("{}: field `kind`: this command needs a bipartite_ds state", path.display()),
        )),
    }
}

fn emit_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    json::to_string(value).map_err(|e| Failure::new(exit::SOFTWARE, format!("serialization: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display())))
}

/// Sends `text` to `--out` when given, otherwise returns it for standard output.
fn deliver(g: &GlobalOpts, text: String) -> Result<String, Failure> {
    match &g.out {
        Some(p) => {
            write_file(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Separable => exit::SEPARABLE,
        Verdict::Entangled => exit::ENTANGLED,
        Verdict::Inconclusive => exit::INCONCLUSIVE,
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Separable => "separable",
        Verdict::Entangled => "entangled",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn analyze(g: &GlobalOpts, budget: &CertifyBudget, input: &Path) -> Result<Outcome, Failure> {
    let (file, state) = load(input, g.normalize)?;
    let rho = match state {
        State::Bipartite(rho) => rho,
        State::Multiqubit(s) => {
            let expected = s.normalization();
            return multiqubit_report(g, &budget.tol, &s, FamilyReportKind::All, expected, None);
        }
    };
    let cert = certify(&rho, budget);
    if cert.verdict != Verdict::Inconclusive && !verify_certificate(&rho, &cert, &budget.tol) {
        return Err(Failure::new(
            exit::SOFTWARE,
            format!("{} evidence failed independent re-verification", verdict_name(cert.verdict)),
        ));
    }
    let report = CertificateReport::new(file, g.normalize, *budget, cert);
    let code = verdict_code(report.verdict);
    let text = if g.json {
        emit_json(&report)?
    } else {
        human_certificate(&report, &rho)
    };
    Ok(Outcome {
        code,
        stdout: deliver(g, text)?,
    })
}

fn human_certificate(r: &CertificateReport, rho: &DsState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "d: {}", rho.d());
    let _ = writeln!(s, "verdict: {}", verdict_name(r.verdict));
    match &r.evidence {
        Evidence::Decomposition { route, factor } => {
            let _ = writeln!(
                s,
                "evidence: nonnegative factor {}x{} via {}",
                factor.dim(),
                factor.ncols(),
                dssep::cones::certify::route_name(route)
            );
        }
        Evidence::TheoremCitation(c) => {
            let _ = writeln!(s, "evidence: PPT suffices ({c:?})");
        }
        Evidence::WitnessViolation { witness, value } => {
            let _ = writeln!(s, "evidence: witness {:?}", witness.provenance);
            let _ = writeln!(s, "witness value: {value:.12}");
        }
        Evidence::NptViolation { min_eigenvalue } => {
            let _ = writeln!(s, "evidence: partial transpose eigenvalue {min_eigenvalue:.6e}");
        }
        Evidence::RangeCriterionInfeasible(rep) => {
            let _ = writeln!(
                s,
                "evidence: range criterion infeasible (kernel dimension {})",
                rep.kernel_basis.len()
            );
        }
        Evidence::AttemptTrace(_) => {}
    }
    for line in &r.trace {
        let _ = writeln!(s, "  {line}");
    }
    s
}

fn parse_projector(spec: &str) -> Result<(f64, Vec<f64>), Failure> {
    let bad = |why: &str| Failure::new(exit::USAGE, format!("--projector {spec:?}: {why}"));
    let (w, v) = spec.split_once(':').ok_or_else(|| bad("expected w:v0,v1,..."))?;
    let w: f64 = w.trim().parse().map_err(|_| bad("weight is not a number"))?;
    let v = v
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad("vector entry is not a number"))?;
    Ok((w, v))
}

fn witness(g: &GlobalOpts, input: &Path, subset: Option<&[usize]>, projectors: &[String]) -> Result<Outcome, Failure> {
    let (file, rho) = load_bipartite(input, g.normalize)?;
    let subset = subset.map_or_else(|| (0..5).collect::<Vec<_>>(), <[usize]>::to_vec);
    let w = lift_witness(&horn_matrix(), rho.d(), &subset).map_err(|e| Failure::new(exit::DATA, e.to_string()))?;
    let terms = projectors
        .iter()
        .map(|p| parse_projector(p))
        .collect::<Result<Vec<_>, _>>()?;
    let m = subtract_rank_one(rho.m_matrix().as_sym(), &terms).map_err(|e| match e {
        Error::DimensionMismatch { .. } => Failure::new(exit::USAGE, format!("--projector: {e}")),
        _ => Failure::new(exit::SOFTWARE, e.to_string()),
    })?;
    let value = witness_value(&w, &m).map_err(|e| Failure::new(exit::SOFTWARE, e.to_string()))?;
    let threshold = detection_threshold(m.frobenius_norm());
    let report = WitnessReport {
        version: statefile::FORMAT_VERSION.into(),
        input: file,
        normalize: g.normalize,
        subset,
        projectors: terms,
        value,
        threshold,
        detected: value < threshold,
    };
    let text = if g.json {
        emit_json(&report)?
    } else {
        format!(
            "value: {value:.12}\nthreshold: {threshold:.3e}\ndetected: {}\n",
            report.detected
        )
    };
    let code = if report.detected {
        exit::ENTANGLED
    } else {
        exit::INCONCLUSIVE
    };
    Ok(Outcome {
        code,
        stdout: deliver(g, text)?,
    })
}

fn multiqubit_report(
    g: &GlobalOpts,
    tol: &Tolerance,
    state: &SymmetricNQubitState,
    kind: FamilyReportKind,
    expected_trace: f64,
    emit: Option<&Path>,
) -> Result<Outcome, Failure> {
    let all = kind == FamilyReportKind::All;
    let want_ppt = all || kind == FamilyReportKind::Ppt;
    let want_ranks = all || kind == FamilyReportKind::Ranks;
    let want_ext = all || kind == FamilyReportKind::Extremality;
    let full = all.then(|| multiqubit::analyze(state, tol));
    let ppt = want_ppt.then(|| full.as_ref().map_or_else(|| multiqubit::is_ppt_all_bipartitions(state, tol), |r| r.ppt));
    let ranks = want_ranks.then(|| full.as_ref().map_or_else(|| multiqubit::ranks_profile(state, tol), |r| r.ranks.clone()));
    let extremality =
        want_ext.then(|| full.as_ref().map_or_else(|| multiqubit::extremality_dimension(state, tol), |r| r.extremality));
    let value = state.unnormalized_trace();
    let trace = TraceCheck {
        value,
        expected: expected_trace,
        relative_error: (value - expected_trace).abs() / expected_trace.abs(),
    };
    let verdict = match (&full, ppt) {
        (Some(r), _) if r.ppt_entangled => Verdict::Entangled,
        (_, Some(false)) => Verdict::Entangled,
        _ => Verdict::Inconclusive,
    };
    let report = MultiqubitReport {
        version: statefile::FORMAT_VERSION.into(),
        input: StateFile::from_multiqubit(state),
        tolerance: *tol,
        verdict,
        ppt,
        min_pt_eigenvalue: want_ppt.then(|| min_pt_eigenvalue(state)),
        ranks,
        extremality,
        ppt_entangled: full.as_ref().map(|r| r.ppt_entangled),
        trace,
    };
    if let Some(p) = emit {
        write_file(p, &emit_json(&report.input)?)?;
    }
    let text = if g.json {
        emit_json(&report)?
    } else {
        human_multiqubit(&report, state)
    };
    Ok(Outcome {
        code: verdict_code(verdict),
        stdout: deliver(g, text)?,
    })
}

fn human_multiqubit(r: &MultiqubitReport, state: &SymmetricNQubitState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "qubits: {}", state.n_qubits());
    if let Some(p) = r.ppt {
        let _ = writeln!(s, "ppt: {p}");
    }
    if let Some(e) = r.min_pt_eigenvalue {
        let _ = writeln!(s, "min partial-transpose eigenvalue: {e:.3e}");
    }
    if let Some(ranks) = &r.ranks {
        let list: Vec<String> = ranks.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "ranks: ({})", list.join(", "));
    }
    if let Some(x) = r.extremality {
        let _ = writeln!(s, "extremality dimension: {x}");
    }
    let _ = writeln!(
        s,
        "trace: {:.12} (expected {:.12}, relative error {:.2e})",
        r.trace.value, r.trace.expected, r.trace.relative_error
    );
    if let Some(e) = r.ppt_entangled {
        let _ = writeln!(s, "ppt entangled: {e}");
    }
    let _ = writeln!(s, "verdict: {}", verdict_name(r.verdict));
    s
}

fn decompose(g: &GlobalOpts, budget: &CertifyBudget, input: &Path, method: Method) -> Result<Outcome, Failure> {
    let (file, rho) = load_bipartite(input, g.normalize)?;
    let m = rho.m_matrix();
    let m = m.as_sym();
    let not_certified = |why: String| Failure::new(exit::NOT_CERTIFIED, format!("not certified separable: {why}"));
    let factor: CpFactorization = match method {
        Method::Auto => {
            let cert = certify(&rho, budget);
            match cert.evidence {
                Evidence::Decomposition { factor, .. } => factor,
                _ => {
                    return Err(not_certified(format!(
                        "pipeline verdict {} without an explicit factor",
                        verdict_name(cert.verdict)
                    )))
                }
            }
        }
        Method::D3 => cp_d3_decompose(m, &budget.tol).map_err(|e| not_certified(e.to_string()))?,
        Method::Rank2 => cp_rank2_embed(m, &budget.tol).map_err(|e| not_certified(e.to_string()))?,
        Method::Zeta => {
            let d = m.dim();
            cp_search(m, 2 * d, budget.restarts, budget.iters, budget.seed).map_err(|e| not_certified(e.to_string()))?
        }
    };
    let decomposition = zeta_decomposition(&factor.pruned());
    if !verify_decomposition(&rho, &decomposition, &budget.tol) {
        return Err(Failure::new(exit::SOFTWARE, "decomposition failed re-verification"));
    }
    let out = DecompositionFile {
        version: statefile::FORMAT_VERSION.into(),
        input: file,
        normalize: g.normalize,
        method: format!("{method:?}").to_lowercase(),
        factor,
        decomposition,
    };
    let text = emit_json(&out)?;
    let stdout = match &g.out {
        Some(p) => {
            write_file(p, &text)?;
            format!(
                "wrote {} product terms ({} factor columns) to {}\n",
                out.decomposition.len(),
                out.factor.ncols(),
                p.display()
            )
        }
        None => text,
    };
    Ok(Outcome {
        code: exit::SEPARABLE,
        stdout,
    })
}
