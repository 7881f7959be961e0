//! Exact verification and reconstruction of local inner derivations on the
//! matrix algebra `M_n(R)` and the Jordan algebra `H_n(R)` of symmetric
//! matrices.

pub mod campaign;
pub mod derivations;
pub mod error;
pub mod globalize;
pub mod jordan;
pub mod linsolve;
pub mod localcheck;
pub mod matrix;
pub mod scalars;
pub mod scan;

pub use error::{Error, Result};
pub use linsolve::{smith_normal_form, solve_linear, FactoredSystem, SmithForm, SolutionSpace};
pub use matrix::Matrix;
pub use scalars::{Element, Ring, RingSpec, Scalar};
