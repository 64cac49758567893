//! Numerical laboratory for Dirichlet forms on inhomogeneous Sierpinski
//! gaskets: renormalisation factors, harmonic-extension matrices, energy
//! measures of harmonic functions, relative capacities and rank statistics
//! of the energy-measure densities.

pub mod blowup;
pub mod capacity;
pub mod energy;
pub mod error;
pub mod gasket;
pub mod harmonic;
pub mod hausdorff;
pub mod matrix;
pub mod par;
pub mod scalar;
pub mod solver;
pub mod subdivision;

pub use error::{Error, Result};
pub use scalar::{ArithmeticMode, ModeRequest, Rational, Scalar};
