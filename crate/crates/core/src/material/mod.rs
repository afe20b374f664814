//! Coefficient tensors, isotropic constants and positivity checks.

mod coefficients;
mod params;
mod positivity;
pub mod tensor;

pub use coefficients::{derive_isotropic, expand_isotropic, CoefficientSet, IsotropicParams, LawKind};
pub use params::{format_params, load_params, parse_params};
pub use positivity::{
    check_positivity, gradient_form_matrix, joint_form_matrix, PositivityReport, PSD_TOL,
};
pub use tensor::Tensor;
