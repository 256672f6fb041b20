//! Star networks of harmonic oscillators whose hub leaks into a thermal bath.
//!
//! The crate covers the whole chain from network parameters to observable
//! dynamics:
//!
//! * [`model`]: parameters and the exact split of the potential matrix into
//!   a scalar shift, the hub-coupling matrix `G` and the diagonal detuning `D`.
//! * [`modes`]: closed-form eigensystem of `G`, first-order corrections from
//!   `D`, and an exact diagonalization used as ground truth.
//! * [`transform`]: canonical (point) transformation to normal coordinates and
//!   the induced Bogoliubov map on ladder operators.
//! * [`dynamics`]: Gaussian-moment evolution under the secular master
//!   equation, a truncated-Fock density-matrix oracle, and synchronization
//!   metrics.
//! * [`sweep`]: coupling-strength scans, mode tracking and scaling fits.
//!
//! Units: `hbar = k_B = 1`, all oscillators share one mass.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod modes;
pub mod sweep;
pub mod transform;

pub use error::{Error, Result};
pub use model::{build_potential, thermal_occupation, NetworkParams, PotentialDecomposition};
pub use modes::{
    exact_diagonalize, g_eigensystem, perturb_corrections, squeezing_estimate, ExactSpectrum,
    ModeDecomposition, ModeLabel, NormalModes, SqueezingEstimate,
};
pub use transform::{bogoliubov_map, build_canonical_transform, BogoliubovMap, CanonicalTransform};
