//! Two-photon quantum Rabi model: exact diagonalization, effective
//! Hamiltonians, spectral collapse, driven-dissipative scattering and the
//! SQUID circuit mapping.
//!
//! Units: frequencies are in units of the cavity frequency `omega_c` (set to 1
//! by default) and `hbar = 1`, except in [`circuit`], which is SI.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod fock_algebra;
pub mod liouville;
pub mod models;
pub mod scattering;
pub mod spectra;

pub use error::{Error, ErrorKind, Result};
pub use fock_algebra::{HilbertSpace, OperatorMatrix, Pauli, C64};
pub use liouville::{DensityMatrix, LindbladConfig, Liouvillian};
pub use models::{ModelSpec, Variant};
pub use scattering::{DriveConfig, DriveTarget};
