//! Effective electromagnetic degrees of freedom of backscatter MIMO systems.
//!
//! The crate evaluates the participation number of the Jacobian of the
//! received wavefront with respect to the load reflection coefficients of a
//! backscatter array, using a multiport-network channel model. It provides
//! the closed-form Jacobian and independent finite-difference oracles,
//! Monte-Carlo sampling of the resulting distribution, multistart
//! Nelder–Mead search for the illumination extremizing its mean, and a
//! synthetic environment generator.

// `!(x > t)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod fd;
pub mod io;
pub mod linalg;
pub mod loads;
pub mod metrics;
pub mod nelder_mead;
pub mod network;
pub mod optimizer;
pub mod rng;
pub mod sampler;
pub mod validation;

pub use environment::{environment_ladder, synth_environment, zero_mc, EnvironmentSpec};
pub use error::{Error, Result};
pub use fd::{
    complex_step_jacobian, discrete_toggle_jacobian, discrete_toggle_jacobian_reflection,
    ChannelMap,
};
pub use linalg::{CMatrix, CVector};
pub use loads::{sample_loads, toggle, ConstraintKind, LoadConstraint};
pub use metrics::{
    benchmark_eemdof, bs_eemdof_point, column_space_residual, conventional_eemdof,
    participation_number, ParticipationResult,
};
pub use network::{
    b_factor, closed_form_jacobian, coupling_resolvent, end_to_end_channel, extract_blocks,
    illumination_matrix, output_wavefront, woodbury_channel_update, Illumination, JacobianMatrix,
    LoadConfiguration, ScatteringBlocks, ScatteringSystem,
};
pub use num_complex::Complex64;
pub use optimizer::{
    mean_dof_objective, optimize_illumination, Direction, OptimizationConfig, OptimizationResult,
};
pub use sampler::{
    histogram, sample_distribution, sample_distribution_with_mode, sample_random_illumination,
    summarize, DofDistribution, IlluminationPolicy, JacobianMode, PolicyKind,
};
pub use validation::{validate_jacobians, ValidationReport};
