//! Special functions and quadrature shared by the closed-form formulas.

mod bessel;
mod quad;

pub use bessel::bessel_i_scaled;
pub use quad::{integrate_finite, integrate_semi_infinite, QuadSpec};
