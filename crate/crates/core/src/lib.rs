//! Noisy limit cycles.
//!
//! Simulation of Itô SDEs with additive noise around attracting limit cycles,
//! decomposition of sample paths into a phase along the cycle and a deviation
//! perpendicular to it (the comoving frame), and the closed-form
//! autocovariance / power-spectrum templates of the supercritical Hopf normal
//! form together with estimators and least-squares fitting.
//!
//! Modules map one-to-one onto the subsystems:
//!
//! * [`sde`] – additive-noise integrators (Euler–Maruyama and an explicit
//!   strong order 3/2 Runge–Kutta scheme), ensembles, strong-order harness.
//! * [`hopf`] – the Hopf normal form and its linear / leading-order
//!   phase–deviation approximations.
//! * [`frame`] – limit-cycle detection, comoving frame, reduced SDE and
//!   reconstruction for general `n`-dimensional systems.
//! * [`analysis`] – ACV / PSD / KDE / kurtosis estimators and the templates.
//! * [`fit`] – least-squares template fitting.
//! * [`validation`] – the acceptance criteria as runnable checks.
//!
//! Ensemble work runs on rayon when the `rayon` feature is enabled (default);
//! every parallel entry point also accepts [`Parallelism::Sequential`], and
//! results never depend on the choice.

pub mod analysis;
pub mod error;
pub mod fit;
pub mod frame;
pub mod hopf;
pub mod io;
pub mod parallel;
pub mod presets;
pub mod rng;
pub mod sde;
pub mod validation;

pub use error::{Error, Result};
pub use parallel::Parallelism;
