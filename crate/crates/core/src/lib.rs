pub mod error;
pub mod experiments;
pub mod fit;
pub mod gl;
pub mod harmonic;
pub mod io;
pub mod minimal;
pub mod quadrature;
pub mod twoval;

pub use error::{Error, Result};
