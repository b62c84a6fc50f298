//! Synthetic data from a teacher network, losses with their regularity
//! constants, and subgradient descent on penalized empirical risk.

mod data;
mod loss;
mod train;

pub use data::{raw_inputs, sample_dataset, sample_unit_ball, Dataset, InputDistribution, TeacherSpec};
pub use loss::{working_range, LossKind, LossSpec};
pub use train::{
    empirical_error, generalization_error_mc, objective, trace_to_csv, train, OptimizerConfig, Regularizer,
    StepSchedule, TraceRow, TrainOutcome,
};
