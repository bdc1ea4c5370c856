//! Spinorial heat flow `∂t ψ = -D²_{g(ψ)} ψ` on flat periodic domains.
//!
//! The metric is induced conformally by the spinor amplitude, `g = ρ² g₀`
//! with `ρ = |ψ|`. The crate provides the Cl(3) substrate, periodic finite
//! differences, flat and conformal Dirac operators, an explicit RK4
//! integrator with CFL control, the monitored diagnostics, the scalar toy
//! model with its exact heat-kernel solution, and the file formats and
//! verification runner used by the `spinflow` binary.

pub mod clifford;
pub mod diagnostics;
pub mod dirac;
pub mod error;
pub mod flow;
pub mod grid;
pub mod shell;
pub mod toy2d;
