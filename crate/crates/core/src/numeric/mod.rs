//! Numerical building blocks shared by the estimators and the simulation
//! oracles: compensated summation, adaptive Gauss–Kronrod quadrature,
//! a safeguarded scalar root finder and the few special functions the
//! worked example needs.

mod quad;
mod roots;
mod special;
mod sum;

pub use quad::{integrate, integrate_to_infinity, QuadOptions, QuadResult};
pub use roots::solve_increasing;
pub use special::{exp_integral_e1, upper_gamma_half};
pub use sum::{compensated_mean, compensated_sum, NeumaierSum};
