//! Sparse noisy top-k gated mixture of GLM experts.

mod gating;
mod model;
mod optim;
mod piecewise;
mod train;

pub use gating::{gate_forward, gate_trace, keep_top_k, GateMode, GateTrace, GatingParams};
pub use model::{moe_loss_and_grad, moe_loss_and_grad_with, moe_predict, MoeGrad, MoeModel, MoePrediction, INIT_STD};
pub use optim::{adam_step, lr_schedule, sgd_step, AdamState, Optimizer, TrainConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_BATCH_SIZE};
pub use piecewise::{piecewise_classify, BinaryClassifier, Cell, PiecewiseHypothesis};
pub use train::{moe_eval_loss, train_glm, train_moe};
