//! Homodyne tomography with a priori constraints.
//!
//! The crate simulates lossy balanced-homodyne records for analytically
//! known states and reconstructs the Wigner function point by point: at
//! each phase-space point the populations of the displaced Fock basis are
//! estimated by maximum likelihood (EM iteration on the probability
//! simplex) with the detector loss built into the likelihood, and the
//! Wigner value follows as their parity. A filtered back-projection
//! baseline is provided for comparison.
//!
//! Modules:
//! - [`kernels`]: Fock wavefunctions and the loss-convolved kernels `A_n(y)`.
//! - [`states`]: analytic test states and their phase-space functions.
//! - [`simulator`]: seeded Monte Carlo event generation and histograms.
//! - [`mle`]: the EM estimator and grid reconstruction.
//! - [`fbp`]: filtered back-projection.
//! - [`dataset`], [`table`], [`grid`]: file formats and evaluation grids.

pub mod dataset;
pub mod error;
pub mod fbp;
pub mod grid;
pub mod kernels;
pub mod mle;
pub mod numerics;
pub mod simulator;
pub mod states;
pub mod table;

pub use dataset::{Dataset, HomodyneRecord};
pub use error::{Error, Result};
pub use fbp::{fbp_kernel, fbp_point, FbpConfig};
pub use grid::GridSpec;
pub use kernels::{coefficient_a, coefficient_table, fock_wavefunction, CoefficientTable};
pub use mle::{
    em_step, estimate_weights, log_likelihood, reconstruct_grid, shift_outcomes,
    wigner_from_weights, EstimateDiagnostics, FockWeights, Init, ReconstructionConfig,
};
pub use simulator::{apply_efficiency, histogram, sample_ideal, simulate, Histogram};
pub use states::{
    fbp_expected_limit, fock_coefficients, quadrature_pdf, squasi_true, wigner_true,
    FockExpansion, Parity, StateSpec,
};
pub use table::{PhaseSpaceTable, TableRow};
