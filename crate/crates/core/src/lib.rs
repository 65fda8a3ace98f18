//! Recursive Fock-basis matrix elements of Gaussian and phase gates, their
//! analytic parameter gradients, and a small state-preparation optimizer.

pub mod checks;
pub mod error;
pub mod gates;
pub mod gaussian;
pub mod gradients;
pub mod linalg;
pub mod nongaussian;
pub mod optimizer;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod state;
pub mod tensor;
pub mod timing;

pub use error::{Error, Result};
pub use gaussian::{GaussianSpec, GeneratingExponent, Squeezing, TwoModeSpec};
pub use num_complex::Complex64 as C64;
pub use tensor::{BuildOptions, GateTensor, MultiIndex, SelectionRule};
