//! Certificates of global optimality, their exact re-verification, flat
//! truncation and rank-one minimizer extraction.

mod certificate;
pub mod exact;
mod flat;
mod moments;

pub use certificate::{
    extract_certificate, verify_certificate, Certificate, CertificateStatus, GramBlock,
    Verification, CERT_TOL,
};
pub use flat::{
    extract_minimizer, extract_minimizer_rank1, flat_truncation, numerical_rank,
    FlatTruncationReport, MinimizerCheck, RankAt, FEASIBILITY_TOL, MOMENT_TOL, RANK_TOL,
    VALUE_TOL,
};
pub use moments::{extract_dual_moments, MomentVector};
