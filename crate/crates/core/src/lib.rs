//! Matrix exponentials in a general moment basis.
//!
//! A moment sequence `m(p)` with `m(0) = 1` defines
//! `E_m(Az) = Σ_p A^p z^p / m(p)` and the moment derivative
//! `∂_m (z^p / m(p)) = z^{p-1} / m(p-1)`. With `m(p) = p!` these are the
//! ordinary exponential and derivative; Gamma-function moments give
//! Mittag-Leffler functions and q-factorials give q-exponentials. The crate
//! covers:
//!
//! * exact (Gaussian rational) and float (binary64) complex matrices,
//! * formal series arithmetic in the moment basis,
//! * analytic evaluation of `E_m(Az)` with truncation control,
//! * Jordan decompositions and the Jordan-block form of `E_m`,
//! * solutions of `∂_m y = A y` and their verification.

pub mod error;
pub mod expm;
pub mod jordan;
pub mod json;
pub mod matrix;
pub mod moment;
pub mod scalar;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use expm::{EvalReport, EvalStatus, TruncationPolicy};
pub use jordan::{JordanBlock, JordanDecomposition, JordanOptions};
pub use matrix::{CMatrix, ExactMatrix, FloatMatrix, Matrix};
pub use moment::{GrowthReport, MomentSequence};
pub use scalar::{Backend, ExactScalar, FloatScalar, Scalar};
pub use series::MomentSeries;
pub use solver::{FundamentalMatrix, IVPSolution};
