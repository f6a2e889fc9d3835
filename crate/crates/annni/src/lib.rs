//! Matrix-free exact diagonalization and fidelity analysis for the
//! one-dimensional ANNNI chain in a transverse field.
//!
//! The crate computes low-lying spectra of finite periodic chains with a
//! thick-restart Lanczos solver, ground-state fidelity and its
//! excited-state overlap decomposition along frustration-parameter
//! sweeps, and locates/classifies energy-level crossings so that
//! fidelity drops can be told apart as genuine transitions or
//! finite-size excited-state artifacts.

pub mod chain;
pub mod crossing;
pub mod error;
pub mod fidelity;
pub mod plots;
pub mod solver;
pub mod sweep;
pub(crate) mod vecops;

pub use chain::{apply_hamiltonian, build_dense, diagonal_energy, ChainSpec, StateVector};
pub use crossing::{
    classify_drops, find_fidelity_drops, find_level_crossings, CrossingConfig, CrossingReport,
    DropClass, FidelityDrop, LevelCrossing,
};
pub use error::{Error, Result};
pub use fidelity::{decompose, fidelity, fidelity_susceptibility, OverlapDecomposition};
pub use solver::{dense_lowest, lanczos_lowest, SolverConfig, Spectrum};
pub use sweep::{run_grid, run_sweep, GridSpec, RunStats, SweepRow, SweepSpec, SweepTable};
