//! Moduli of convexity and separated sequences in finite-dimensional l^p
//! spaces.

pub mod cli;
pub mod error;
pub mod io;
pub mod modulus;
pub mod sequences;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use spaces::{ContractionMap, Functional, LpSpace, Vector};
