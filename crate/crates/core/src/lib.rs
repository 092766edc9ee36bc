//! Isogeometric analysis of linear Kirchhoff-Love shells with quadratic NURBS,
//! using compatible-strain (CS) or continuous-assumed-strain (CAS) elements.

pub mod error;
pub mod nurbs;
pub mod postprocess;
pub mod benchmarks;
pub mod cli;
pub mod discretization;
pub mod shell;
pub mod solver;

pub use error::{Result, ShellError};
