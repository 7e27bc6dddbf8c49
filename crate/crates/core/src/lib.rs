//! Spectral toolkit for the nonlinear Schrödinger equation
//! `i u_t + Δu = ±|u|^{p-1} u` on a periodic box.

pub mod data;
pub mod exponents;
pub mod functionals;
pub mod ground_state;
pub mod integrator;
pub mod orbital;
pub mod spectral;
