//! Numerical checks of the energy inequalities, the trilinear estimates and
//! the convergence rate, computed from recorded runs.

mod certificate;
mod lemma;
mod smallness;
mod sweep;

pub use certificate::{
    certify_dtu, certify_limit_energy, certify_pe_energy, dtu_budget, needs_mean,
    write_certificates_csv, CertificateReport, CertificateStatus, RunMeta, CERTIFICATE_CSV_HEADER,
};
pub use lemma::{
    family_ratios, fitted_constant, lemma_lhs, lemma_ratio, lemma_rhs, FamilyRatios, FittedConstant,
    LemmaEvaluation, LemmaKind, LemmaSample, PairingRoute, SampleFamily,
};
pub use smallness::{smallness_check, SmallnessReport};
pub use sweep::{
    convergence_sweep, leg_norms, loglog_fit, run_leg, sweep_from_records, LegRecord, SweepLeg,
    SweepResult, SWEEP_CSV_HEADER,
};
