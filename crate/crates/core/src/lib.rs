//! Stochastic Galerkin finite element systems in Kronecker form for the
//! parametric diffusion equation, with truncation and block Gauss-Seidel
//! preconditioners, a PCG solver and dense spectral checks.

pub mod cholesky;
pub mod error;
pub mod experiment;
pub mod fem2d;
pub mod gram;
pub mod kronsys;
pub mod multiindex;
pub mod orthopoly;
pub mod pcg;
pub mod quadrature;
pub mod precond;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
