//! Time integration, energy bookkeeping and decay fits.

mod decay;
mod simulate;
mod step;

pub use decay::{fit_decay, proof_chain_rate, DecayFit, ProofRate, BOUND_SLACK, TRANSIENT_FRACTION};
pub use simulate::{
    initial_state, lyapunov, lyapunov_cross_constant, simulate, EnergyTrace, InitialData, SimConfig,
};
pub use step::{Scheme, StepOutput, Stepper};
