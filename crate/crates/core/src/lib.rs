//! Readout-error mitigation on the subspace of observed bit-strings.
//!
//! The assignment matrix is restricted to the measured bit-strings and to
//! entries within a Hamming distance cut-off, then the linear system is solved
//! either by dense LU or by preconditioned Krylov iterations that never store
//! the matrix.

pub mod amatrix;
pub mod bitstring;
pub mod calibration;
pub mod error;
pub mod io;
pub mod krylov;
pub mod overhead;
pub mod postprocess;
pub mod sim;
pub mod solver;

pub use amatrix::{
    build_full_matrix, build_reduced, estimate_csc_memory, CscMatrix, CscMemoryEstimate, ElementOracle, ErrorModel,
    ReducedAssignmentMatrix, StorageKind,
};
pub use bitstring::{hamming_distance, BitString, CountsDistribution, QuasiDistribution};
pub use calibration::{load_calibration, load_calibration_file, CalibrationSet, PairwiseCal, SingleQubitCal};
pub use error::{CalibrationError, Error, Result};
pub use overhead::{estimate_inv_one_norm, sigma_bound, OverheadReport};
pub use postprocess::{expval, expval_with_stddev, nearest_probability, DiagonalOperator};
pub use sim::{ghz_ideal, sample_noisy, IdealDistribution, NoiseSpec};
pub use solver::{mitigate, mitigate_with_overhead, solve, Method, MitigationResult, SolveOptions, SolveReport};
