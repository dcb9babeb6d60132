//! Solver core for the stochastic wave equation with nonlinear damping
//! on the unit interval/square with homogeneous Dirichlet boundaries:
//!
//! ```text
//! du = v dt,    dv = (Δu + f(v)) dt + dW_Q(t)
//! ```
//!
//! Space is discretized by a spectral Galerkin truncation onto the first
//! Dirichlet sine modes, where every linear operator is diagonal. Time is
//! advanced by a modified implicit exponential Euler step: the wave group
//! transports state and noise exactly, the damping term is treated
//! implicitly at the new time level.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the
//! default `std` feature for embedded/FFI use. All types are immutable
//! values after construction and safe to share across threads. Random
//! draws are counter-seeded per mode so that noise paths are reproducible
//! bit-for-bit across runs, grid refinements and thread counts.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod integrator;
mod math;
pub mod noise;
pub mod nonlinearity;
pub mod semigroup;
pub mod spectral;

mod dst;

pub use error::{Error, Result};
pub use integrator::{integrate, solve_implicit, step, SchemeConfig, SolverBranch, StepDiagnostics};
pub use noise::{mix_seed, NoisePath, NoiseSpec};
pub use nonlinearity::{check_assumptions, AssumptionReport, CollocationPlan, NonlinearitySpec};
pub use spectral::{Field, PairState, SpectralGrid};
