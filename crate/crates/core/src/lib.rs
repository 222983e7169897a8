pub mod contact;
pub mod doublewell;
pub mod error;
pub mod fourlevel;
pub mod krylov;
pub mod lattice;
pub mod meanfield;
pub mod ode;
pub mod quad;
pub mod tdse;
pub mod specfun;

pub use error::{Error, Result};
