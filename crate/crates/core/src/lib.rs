pub mod error;
pub mod jet;
pub mod asymptotics;
pub mod cli;
pub mod kahler;
pub mod oracles;
pub mod quadrature;
pub mod recursion;
pub mod scalar;

pub use error::{Error, Result};
