//! Minimal 1-D network kernel: batched tensors, layers with analytic
//! backward passes, losses, SGD and flat parameter views.

pub mod checkpoint;
pub mod conv;
pub mod loss;
pub mod norm;
pub mod ops;
pub mod param;
pub mod real;
pub mod sgd;
pub mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, Digest};
pub use conv::{Conv1d, DepthwiseConv1d};
pub use loss::{argmax, mse_loss, predict, softmax, softmax_cross_entropy};
pub use norm::BatchNorm1d;
pub use ops::{AvgPool1d, GlobalAvgPool, Linear, Relu};
pub use param::{flatten_grads, flatten_params, layout_of, load_params, Layout, LayoutEntry, Module, Param, ParamKind, ParamVector};
pub use real::Real;
pub use sgd::Sgd;
pub use tensor::Tensor;
