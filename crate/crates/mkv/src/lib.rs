//! Pseudospectral simulation and bifurcation analysis of noisy mean-field
//! dynamics on the torus.
//!
//! The crate integrates the stochastic PDE
//!
//! ```text
//! du = [ σ ∂ₓₓu + ∂ₓ( u (V' + F' ∗ u) ) ] dt + γ dWˢ
//! ```
//!
//! on `[0, 2π)` with a Fourier Galerkin discretization and an exponential
//! Euler–Maruyama stepper, locates the stationary Gibbs states of the
//! deterministic flow by a finite-dimensional self-consistency problem,
//! classifies their linear stability, and measures strong convergence rates
//! with noise-coupled Monte-Carlo studies.
//!
//! # Quick start
//!
//! Integrate the double-well model for a short horizon and read off the
//! order parameters:
//!
//! ```
//! use mkv::integrator::{simulate, InitialCondition, SimConfig};
//! use mkv::model::{ModelSpec, Preset};
//!
//! let spec = ModelSpec::preset(Preset::DoubleWell, 0.5, 1e-2, 0.75, 64)?;
//! let config = SimConfig {
//!     dt: 1e-2,
//!     t_max: 5.0,
//!     j: 64,
//!     seed: 1,
//!     snapshot_stride: 10,
//!     initial: InitialCondition::SinSquared,
//! };
//! let traj = simulate(&spec, &config)?;
//! // Mass ∫u dx is conserved exactly by construction.
//! assert!((traj.series.mass.last().unwrap() - 1.0).abs() < 1e-12);
//! # Ok::<(), mkv::error::Error>(())
//! ```
//!
//! Solve the stationary problem and classify the roots:
//!
//! ```
//! use mkv::model::{ModelSpec, Preset};
//! use mkv::stability::label_roots;
//! use mkv::stationary::{Stability, StationaryProblem};
//!
//! let spec = ModelSpec::preset(Preset::DoubleWell, 0.2, 1e-2, 0.75, 64)?;
//! let problem = StationaryProblem::from_model(&spec)?;
//! let mut search = problem.find_fixed_points(1e-10, 2048)?;
//! label_roots(&problem, &mut search.results, &spec, 64)?;
//! assert_eq!(search.results.len(), 3);
//! let stable = search.results.iter()
//!     .filter(|r| r.stability == Stability::Stable)
//!     .count();
//! assert_eq!(stable, 2);
//! # Ok::<(), mkv::error::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod integrator;
pub mod langevin;
pub mod model;
pub mod noise;
pub mod observables;
pub mod output;
pub mod spectral;
pub mod stability;
pub mod stationary;

pub use error::{Error, Result};
