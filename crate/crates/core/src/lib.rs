//! Numerical toolkit for half-discrete Hardy-Hilbert-type inequalities with
//! hyperbolic-cosecant kernels.
//!
//! The library evaluates the kernel constant two independent ways, the
//! weight coefficients with their certified bounds, weighted norms and the
//! coupled bilinear form in all three Holder regimes, and two independent
//! routes to the best-possible constant (extremal families and a
//! discretized operator norm).

pub mod error;
pub mod inequality;
pub mod kernel;
pub mod measures;
pub mod presets;
mod quad;
pub mod sharpness;
pub mod specfun;
pub mod weights;

pub use error::{Error, Result};
pub use weights::Verdict;
