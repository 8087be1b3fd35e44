//! Stochastic average adjusted gradient (SAAG) solvers for regularized
//! empirical risk minimization, with SVRG, VR-SGD, GD and SGD baselines.
//!
//! ```
//! use saag::{synthetic, Objective, LossKind, Regularizer, RunConfig, SolverKind, SyntheticSpec};
//!
//! let data = synthetic(&SyntheticSpec::default()).unwrap();
//! let obj = Objective::new(LossKind::Logistic, Regularizer::ridge(1e-3), &data);
//! let cfg = RunConfig::new(SolverKind::Saag2, 5, 16, 1);
//! let out = saag::run(&cfg, &obj, &data).unwrap();
//! assert!(out.trace.failure.is_none());
//! ```

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod harness;
pub mod line_search;
pub mod objective;
pub mod solvers;
pub mod suite;
pub mod verify;

pub use dataset::{
    load_libsvm, make_schedule, parse_libsvm, parse_libsvm_str, split_train_test, synthetic, BatchSchedule, Dataset,
    SparseVector, SyntheticSpec,
};
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, GradTable, SnapScaling, SnapState};
pub use harness::{emit_csv, parse_csv, render_csv, Trace, TracePoint, CSV_HEADER};
pub use line_search::{sbas, SbasOutcome, SbasParams, StepBranch};
pub use objective::{prox, soft_threshold, LossKind, Objective, Regularizer};
pub use solvers::{reference_optimum, run, ReferenceOptimum, RunConfig, RunOutput, SolverKind};
pub use verify::{alpha_b, estimate_constants, theoretical_rate, ProblemConstants, RateParams, Theorem};
