//! Scrambling through a constrained basis mapping.
//!
//! Free fermions on a logical chain of `L_tau` sites map configuration by
//! configuration onto hard-core fermions with nearest-neighbour exclusion on
//! `L = L_tau + N - 1` physical sites. Logical dynamics is a Slater
//! determinant; physical observables are reconstructed by sampling it.
//!
//! Modules:
//! - [`basis`]: the configuration bijection and constrained enumeration.
//! - [`slater`]: single-particle spectrum and Slater-state propagation.
//! - [`sampler`]: exact chain-rule sampling of `|det|^2` and a DPP oracle.
//! - [`estimator`], [`observables`]: physical correlations and diagnostics.
//! - [`exact`]: dense exact diagonalization and the thermal OTOC.
//! - [`fits`]: curve fits for the extracted scales.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod fits;
pub mod linalg;
pub mod observables;
pub mod sampler;
pub mod slater;

pub use basis::{
    check_constraint, decode, enumerate_logical, enumerate_physical, logical_to_physical, particle_coordinates,
    physical_to_logical, sector_dimension, BitString, ConstrainedBasis, LogicalConfig, PhysicalConfig,
};
pub use error::{Error, Result};
pub use exact::{
    build_physical_hamiltonian, build_unconstrained_hamiltonian, evolve_exact, exact_correlation,
    free_fermion_otoc_reference, logical_manybody_spectrum, otoc, spectrum_check, ExactEngine, ManyBodyOperator, OtocEngine,
    SpectrumCheck,
};
pub use fits::{extract_butterfly_velocity, fit_arctan, fit_lyapunov, fit_powerlaw, FitResult};
pub use observables::{
    correlation_estimate, density_estimate, diffusion_prediction, hamming_distance, luttinger_k, momentum_distribution,
    natural_orbitals, relaxation_z, structure_factor, CorrelationMatrix, NaturalOrbitalSpectrum, ScramblingDiagnostics,
    StructureFactor,
};
pub use sampler::{sample_batch, sample_batch_with, BatchSidecar, SampleBatch, SamplerKind};
pub use slater::{build_hamiltonian, ground_state_slater, initial_slater, HoppingHamiltonian, SlaterSnapshot, SlaterState};

pub use num_complex::Complex64;
