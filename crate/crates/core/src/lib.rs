//! Separability tools for bipartite diagonal symmetric states and a family of
//! symmetric multiqubit states.

pub mod cones;
pub mod decomp;
pub mod ds_state;
pub mod error;
pub mod matcore;
pub mod multiqubit;
pub mod range_criterion;

pub use cones::{certify, verify_certificate, CertifyBudget, SeparabilityCertificate, Verdict};
pub use decomp::SeparableDecomposition;
pub use ds_state::{DsState, MMatrix, PtSpectrumReport};
pub use error::{Error, Result};
pub use matcore::{SymMatrix, Tolerance};
pub use multiqubit::SymmetricNQubitState;
