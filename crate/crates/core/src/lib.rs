//! Decide, from the moments γ_i(j) = ∫ tʲ xⁱ dμ(x,t) of a probability
//! measure on [0,1]², whether μ is supported on a trajectory
//! {(t, x(t)) : t ∈ [0,1]}, and if so reconstruct x(t).
//!
//! The test works in the shifted Legendre basis: the triangular
//! transform Δ maps each moment row γ_i to the Legendre-Fourier
//! coefficients of the disintegration density f_i(t) = ∫ xⁱ ψ(dx|t),
//! and μ sits on a trajectory exactly when Δγ_i equals the i-th
//! ⋆-power of Δγ_1 for every i ≥ 2. A general t-marginal dν = h(t)dt
//! is handled by orthonormal polynomials built from the marginal
//! moments.

pub mod error;
pub mod legendre_basis;
pub mod moment_model;
pub mod moment_synth;
pub mod orthopoly_general;
pub mod series_algebra;
pub mod trajectory_detector;

pub use error::{Error, Result};
pub use legendre_basis::{
    build_shifted_legendre, build_shifted_legendre_capped, gauss_legendre_01,
    legendre_coefficients, BasisTransform, QuadratureRule,
};
pub use moment_model::{LoadOptions, Marginal, MomentStore, MomentTable, StoreEntry};
pub use moment_synth::{
    apply_noise, oracle_residual, synthesize, MarginalDensity, MeasureKind, MeasureSpec,
    TrajectoryFn,
};
pub use orthopoly_general::{
    build_from_moments, build_from_moments_capped, general_coefficient_row, OrthonormalBasis,
};
pub use series_algebra::{
    evaluate, l2_distance, linf_distance, project, project_smooth, star_power, star_product,
    BasisTag, LebesgueBasis, LegendreSeries, SeriesBasis,
};
pub use trajectory_detector::{
    algebraic_support_check, check_trajectory, reconstruct_trajectory, AlgebraicSupport,
    CheckConfig, DetectionReport, KernelTerm, ResidualEntry, ResidualNorm, Verdict,
};
