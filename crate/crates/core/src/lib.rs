//! Numerical toolkit for collections of qubits coupled to a single cavity mode
//! with parametrically modulated parameters.

pub mod dispersive;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod ode;
pub mod presets;
pub mod scan;
pub mod sparse;

pub use error::{Error, ErrorCategory, Result};
pub use num_complex::Complex64 as C64;
