use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the supported domain: {0}")]
    Domain(String),

    #[error("pole of the Gamma function at x = {0}")]
    Pole(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid double-well geometry: {0}")]
    Geometry(String),

    #[error("root finder did not converge in bracket [{lo}, {hi}]: {reason}")]
    RootNotConverged { lo: f64, hi: f64, reason: String },

    #[error("near-degenerate double root near nu2 = {nu2} (|f| = {residual:e})")]
    NearDegenerate { nu2: f64, residual: f64 },

    #[error("singular coupling: {0}")]
    SingularCoupling(String),

    #[error("trap is unstable: a + q^2/2 = {0} <= 0")]
    TrapStability(f64),

    #[error("basis too small: {0}")]
    Basis(String),

    #[error("step size underflow at t = {t}: h = {h:e} after {steps} steps")]
    Stiffness { t: f64, h: f64, steps: usize },

    #[error("invalid lattice configuration: {0}")]
    Lattice(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
