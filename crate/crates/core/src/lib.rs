pub mod coefficients;
pub mod env_kernels;
pub mod error;
pub mod idf_response;
pub mod io;
pub mod mirror_kernels;
pub mod optics;
pub mod params;
pub mod pipeline;
pub mod spectral;
pub mod verify;
pub mod wigner_sim;

pub use error::{Error, Result};
