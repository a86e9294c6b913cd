//! Kernel support vector machines: C-SVC and epsilon-SVR with an RBF
//! kernel, trained by sequential minimal optimization.

mod error;
pub mod kernel;
pub mod scaler;
pub mod solver;
pub mod svc;
pub mod svr;

pub use error::{Result, SvmError};
pub use kernel::{rbf, KernelParams, KernelSource, RbfRows};
pub use scaler::Scaler;
pub use solver::{DualSolution, SolverParams, WorkingSetSelection};
pub use svc::{train_csvc, train_csvc_with, Class, Fit, SvcModel, SvcParams};
pub use svr::{train_epsilon_svr, train_epsilon_svr_with, SvrModel, SvrParams, DEFAULT_EPSILON};
