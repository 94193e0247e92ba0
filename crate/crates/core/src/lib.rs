//! Linearized optomechanics with laser phase noise.
//!
//! The crate computes mean-field operating points, builds the five-dimensional
//! linear model in the squeezing frame (optical mode, mechanical mode and the
//! Ornstein-Uhlenbeck phase-noise mode ψ), propagates Gaussian moments, and
//! evaluates quantum-memory fidelity and stationary entanglement.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision types most callers want.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod protocols;
pub mod scalar;
pub mod stochastic;

pub use dynamics::{
    build_drift, build_noise, evolve, is_stable, routh_hurwitz, solve_lyapunov, squeezed_bath_correlations,
    steady_covariance, BathCorrelations, CouplingSign, LinearModel, MomentState, RouthHurwitz, Stability, Switches,
};
pub use error::{Error, Result};
pub use gaussian::{
    gaussian_fidelity, initial_memory_state, log_negativity, partial_state, symplectic_eigenvalues, Fidelity,
    GaussianState, LogNegativity,
};
pub use model::{
    derive_effective, invert_for_drive, kerr_coefficient, refine_steady_state, solve_steady_state, DriveDesign,
    DriveTarget, EffectiveParams, MeanField, PhysicalParams, Resonance, SteadyStateOptions, Warning,
};
pub use protocols::{
    memory_protocol, reference_base, run_entanglement, run_memory, stationary_entanglement, sweep, Axis, AxisSpec,
    DetuningMode, EntanglementConfig, EntanglementResult, Experiment, MemoryConfig, MemoryResult, MemorySchedule,
    OperatingPoint, RowStatus, RowValues, Spacing, SweepRow, SweepSpec,
};
pub use scalar::Real;
pub use stochastic::{
    estimate_spectrum, mc_ensemble, sample_ou, McEstimate, NoiseSpec, OuEnsemble, Sampling, Spectrum,
};

pub type PhysicalParamsF64 = PhysicalParams<f64>;
pub type PhysicalParamsF32 = PhysicalParams<f32>;
pub type EffectiveParamsF64 = EffectiveParams<f64>;
pub type EffectiveParamsF32 = EffectiveParams<f32>;
pub type GaussianStateF64 = GaussianState<f64>;
pub type GaussianStateF32 = GaussianState<f32>;
pub type LinearModelF64 = LinearModel<f64>;
pub type LinearModelF32 = LinearModel<f32>;
pub type MomentStateF64 = MomentState<f64>;
pub type MomentStateF32 = MomentState<f32>;
pub type MemoryConfigF64 = MemoryConfig<f64>;
pub type EntanglementConfigF64 = EntanglementConfig<f64>;
