//! Kernel SVM training toolkit.
//!
//! Two binary trainers share one kernel layer:
//!
//! - [`smo`]: exact SMO with maximal-violating-pair selection. Pair selection is a
//!   parallel reduction and the optimality-vector update a parallel per-sample map,
//!   both bit-identical to their sequential form.
//! - [`gd`]: projected gradient ascent on the same dual objective.
//!
//! [`multiclass`] decomposes an `m`-class problem into `m(m-1)/2` one-vs-one jobs
//! and runs them on an in-process worker pool; [`bench`] times sweeps of those
//! runs and [`model_file`] persists trained models as versioned JSON.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod gd;
pub mod kernel;
pub mod model_file;
pub mod multiclass;
pub mod smo;

pub use dataset::{BinaryProblem, Dataset, NormalizationStats, SampleRows};
pub use error::{Result, SvmError};
pub use kernel::KernelSpec;
pub use multiclass::{MulticlassModel, PoolConfig, Schedule, SolverChoice};
pub use smo::{BinaryModel, SmoConfig};
