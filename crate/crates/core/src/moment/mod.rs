//! Moment-method and Gramian controls for the linearized systems.

mod biorth;
mod control;
mod cost;
mod gramian;
mod spectrum;
pub mod xprec;

pub use biorth::{biorthogonal_family, BiorthFamily, PrecisionPolicy};
pub use control::{
    basis_cos, basis_sin, check_ch_profiles, check_ks_profile, moment_control, moment_control_ch, moment_control_ks,
    pairing_cos, pairing_exp, pairing_sin, HypothesisReport, MomentControl, MomentSeries, MomentSolver, DEFAULT_THETA,
};
pub use cost::{cost_law, fit_m, CostLaw, M_FLOOR};
pub use gramian::{gramian_for_terminal, gramian_oracle, GramianControl, GramianLaw};
pub use spectrum::{build_spectrum, certify, eigenvalue, sigma, Certificates, ExpSpectrum};
