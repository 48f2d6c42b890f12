//! SG-pseudodifferential calculus on R^n: symbol expression trees with exact
//! differentiation, numerical estimate and principal-symbol verification,
//! grid quantization oracles, scattering-geometry canonical transformations,
//! and Fourier integral operators of type Q.

pub mod cli;
pub mod error;
pub mod expr;
pub mod fio;
pub mod jet;
pub mod psdo;
pub mod sampling;
pub mod scatgeo;
pub mod symbols;

pub use error::{Result, SgError};
