//! Forward and inverse solvers for one-dimensional heat conduction `u_t = (a(x) u_x)_x`
//! on `[0, 1]` with piecewise-constant conductivity `a(x)`.
//!
//! * [`piecewise`]: the class of piecewise-constant functions and conductivity profiles.
//! * [`laplace`]: exact Laplace-domain solvers and the transfer function `H(lambda)`.
//! * [`time_domain`]: finite-volume simulator and numerical Laplace transforms.
//! * [`property_c`]: numerical checks of the product-completeness machinery.
//! * [`inverse`]: least-squares reconstruction of `a(x)` from transfer-function samples.
//! * [`cli`]: the `pwcheat` command-line front end.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod format;
pub mod inverse;
pub mod laplace;
pub mod piecewise;
pub mod property_c;
pub mod quadrature;
pub mod scaled;
pub mod time_domain;

pub use dataset::{Provenance, TransferDataset, TransferSample};
pub use error::{Error, Result};
pub use laplace::{solve_psi, solve_v, transfer_function, PsiSolution, VSolution};
pub use piecewise::{ConductivityProfile, Norm, PiecewiseFunction};
