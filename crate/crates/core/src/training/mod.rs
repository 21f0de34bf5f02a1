//! Losses, the training protocol and evaluation.

mod config;
mod eval;
mod loss;
mod train;

pub use config::{parse_task, task_name, ModelKind, TrainConfig, CONFIG_KEYS};
pub use eval::{argmax, evaluate, predict_all, score, select_supervised, Metric};
pub use loss::{batch_loss, class_cross_entropy, combined_loss, squared_error, visual_loss};
pub use train::{minibatches, multi_run, run_seed, train, EpochRecord, MultiRun, RunResult};

#[cfg(test)]
mod tests;
