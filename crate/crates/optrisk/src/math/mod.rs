//! Shared numerical primitives: normal distribution functions, cubic
//! splines, Black–Scholes formulas and adaptive quadrature.

pub mod black_scholes;
pub mod normal;
pub mod quadrature;
pub mod spline;
