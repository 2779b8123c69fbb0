//! Special functions: complex log-gamma and digamma, adaptive quadrature,
//! the smoothing weight `F` with its Mellin transform, and the cutoff
//! functions of the approximate functional equation.

mod bump;
mod cutoff;
mod gamma;
pub mod quad;

pub use bump::{bump_F, mellin_F, mellin_F_derivative, BumpSpec};
pub(crate) use bump::bump_unchecked;
pub use cutoff::{
    cutoff_W, effective_cutoff, CutoffEval, CutoffKernel, CutoffKind, CutoffSpec, CutoffTable,
    Path,
};
pub use gamma::{digamma, gamma_upper_integer, log_gamma, log_gamma_real, EULER_GAMMA};
