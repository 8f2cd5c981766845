//! Numerical laboratory for a charged particle in a punctured plane, driven
//! by a homogeneous magnetic field and a linearly ramped Aharonov–Bohm flux.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod classical;
pub mod cli;
pub mod io;
pub mod ode;
pub mod quadrature;
pub mod reduced;
pub mod specfun;
pub mod spectral;
pub mod tridiag;
