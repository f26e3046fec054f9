//! Generator matrices on small state spaces and exact matrix identities.

mod evolve;
mod gap;
mod generator;
mod space;

pub use evolve::{evolve_distribution, Evolution};
pub use gap::{
    duality_gap, intertwining_gap, psi_matrix, thinning_kernel_matrix, verify_dupar, verify_dupar_general,
    DenseMatrix, DupReport, GapReport, GeneralDupReport,
};
pub use generator::{build_generator, GeneratorMatrix};
pub use space::StateSpace;
