//! Shared test oracles, kept independent of the library's solvers.

pub mod jacobi;
pub mod qp;
