//! Damping laws and decay envelopes for nonlinear velocity damping.

mod decay;
mod law;

pub use decay::{
    build_envelope, check_majorant, check_sequence_lemma, envelope_compare, estimate_c_lemma,
    integrate_decay_ode, CLemmaEstimate, DecayEnvelope, EnvelopeComparison, EnvelopeRow,
    LemmaReport, SRecord,
};
pub use law::{law_samples, validate_damping, DampingLaw, LawCheck, LawFamily, ScalarFn, ValidationReport};
