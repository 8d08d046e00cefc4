//! DNN and CP cone tests on `M`, sufficient conditions, copositive witnesses and the
//! separability pipeline.

pub mod certify;
pub mod factor;
pub mod sufficient;
pub mod witness;

pub use factor::{
    cp_d3_decompose, cp_rank2_embed, cp_search, dd_factor, is_diag_dominant, is_dnn,
    CpFactorization,
};
pub use sufficient::{
    cert_anna, cert_anna_matrix, cert_jordis, cert_jordis_matrix, search_jordis,
    search_jordis_matrix, AnnaCertificate, JordisCertificate,
};
pub use witness::{
    horn_matrix, lift_witness, scaled_horn, witness_scan, witness_value, Provenance,
    ScanBudget, ScanResult, Witness,
};
pub use certify::{
    certify, verify_certificate, CertifyBudget, Citation, Evidence, FactorRoute,
    SeparabilityCertificate, Verdict,
};
