pub mod discretization;
pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod io;
pub mod material;
pub mod modes;
pub mod numerics;
pub mod observability;

pub use error::{LabError, Result};
