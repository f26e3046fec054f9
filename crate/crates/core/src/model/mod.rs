//! Lattice models: kernels, rates, configurations and site-local generators.

pub mod colony;
pub mod config;
pub mod jumps;
pub mod kernel;
pub mod mapping;
pub mod rates;
pub mod spec;

pub use colony::{colony_kernel, colony_site};
pub use config::{Config, Variant};
pub use jumps::{
    aggregate, bps_jumps, cvp_jumps, lsm_jumps, rw_jumps, BpsProcess, CvpProcess, Jump, LocalGenerator,
    LsmProcess, RwProcess,
};
pub use kernel::{Kernel, KernelSpec};
pub use mapping::{cvp_as_lsm, rw_as_lsm};
pub use rates::{
    BpsParams, CvpParams, GeneralLsmRates, LsmRates, Mechanism, NoiseConvention, RwParams, SrwParams, SsmParams,
};
pub use spec::{ModelDocument, ModelSpec, NumLit};
