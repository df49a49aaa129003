//! Numerical building blocks shared by the models: differentiation,
//! quadrature, ODE integration, regression and special functions.

pub mod diff;
pub mod ode;
pub mod quadrature;
pub mod regression;
pub mod special;
