//! Numerical laboratory for moments of central derivatives of quadratic
//! twists `L'(1/2, f ⊗ χ_{8d})` of holomorphic newforms.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: sieves, factorisation, Möbius and Kronecker symbols.
//! * [`special`]: log-gamma, digamma, the smoothing weight `F` and its Mellin
//!   transform, and the cutoff functions of the approximate functional equation.
//! * [`forms`]: the form registry, Hecke coefficient tables and their cache.
//! * [`lfunc`]: root numbers and central values of individual twists.
//! * [`eulerprod`]: symmetric-square and Rankin–Selberg values, the
//!   arithmetic factors `Z*` and the assembled main-term constants.
//! * [`moments`]: families of twists, empirical moments and predictions.
//! * [`verify`]: Gauss-sum and Poisson-summation self checks.
//! * [`cli`]: the `twistlab` command-line front end.

pub mod arith;
pub mod cli;
pub mod error;
pub mod eulerprod;
pub mod exec;
pub mod forms;
pub mod lfunc;
pub mod moments;
pub mod special;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
