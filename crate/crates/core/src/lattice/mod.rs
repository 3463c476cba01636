//! Time-lattice coherent-state path integrals on a phase-space grid.
//!
//! A kernel (exact `<z'|e^{-εH}|z>` or a naive `exp(zbar' z - ε s)` built from a
//! symbol) is discretized on a [`QuadratureGrid`]; the partition function is
//! the trace of the `N`-th power of the resulting transfer matrix.

mod anomaly;
mod grid;
mod kernel;
mod transfer;

pub use anomaly::{anomaly_report, AnomalyCase, AnomalyReport, AnomalyRow};
pub use grid::{build_grid, AliasedEntry, IdentityCheck, QuadratureGrid, ALIAS_TOLERANCE};
pub use kernel::{exact_kernel, kind_for, naive_kernel, KernelMode, KernelSpec, SymmetricRule};
pub use transfer::{
    lattice_partition, lattice_partition_with, lattice_trace, refine_partition, trace_of_power, transfer_blocks,
    transfer_matrix, GridCheck, LatticePartition, Refinement, RefinementOptions, TransferMethod, IMAG_TOLERANCE,
};

/// Radial nodes of the default grid.
pub const DEFAULT_RADIAL_ORDER: usize = 24;
/// Angular nodes of the default grid. Naive quartic kernels need `Q_a = 64`
/// to stay free of angular aliasing up to `N = 4096`.
pub const DEFAULT_ANGULAR_ORDER: usize = 64;
/// Fock truncation used with the default grid.
pub const DEFAULT_FOCK_DIM: usize = 30;
