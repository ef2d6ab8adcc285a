//! Numerical toolkit for operator-valued Fourier multipliers on periodic grids.
//!
//! Functions take values in truncated sequence spaces `l_q^N`; operators are
//! positive diagonal or symmetric matrices. On top of the transform core sit
//! weighted Bochner norms, Muckenhoupt constants, R-bound estimates, and
//! spectral solvers for abstract elliptic and parabolic equations together
//! with reports that measure how uniform their a-priori estimates are.

pub mod corpus;
pub mod elliptic;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod function_space;
pub mod io;
pub mod multiplier;
pub mod operator;
pub mod parabolic;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
